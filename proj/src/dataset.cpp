#include <onestep/dataset.hpp>
#include <onestep/error.hpp>

#include <cmath>

namespace onestep {

Dataset make_dataset(Eigen::MatrixXd X, Eigen::VectorXd y, Likelihood family, bool intercept,
                     std::vector<std::string> column_names)
{
    Dataset data;
    data.X = std::move(X);
    data.y = std::move(y);
    data.family = family;
    data.intercept = intercept;
    data.column_names = std::move(column_names);
    if (data.column_names.empty()) {
        for (Eigen::Index j = 0; j < data.X.cols(); ++j)
            data.column_names.push_back("x" + std::to_string(j + 1));
    }
    validate(data);
    return data;
}

void validate(const Dataset& data)
{
    if (data.n() < 2) throw ValidationError("dataset needs at least 2 observations");
    if (data.p() < 1) throw ValidationError("dataset needs at least 1 predictor");
    if (data.y.size() != data.n()) throw ValidationError("response length does not match design rows");
    if (!data.X.allFinite() || !data.y.allFinite()) throw ValidationError("dataset contains non-finite values");
    if (static_cast<Eigen::Index>(data.column_names.size()) != data.p())
        throw ValidationError("column name count does not match design columns");
    if (data.family == Likelihood::Binomial) {
        for (Eigen::Index i = 0; i < data.n(); ++i) {
            if (data.y[i] != 0.0 && data.y[i] != 1.0)
                throw ValidationError("binomial responses must be 0 or 1");
        }
    }
}

Dataset standardize(const Dataset& data)
{
    Dataset out = data;
    const auto p = data.p();
    out.column_means = Eigen::VectorXd::Zero(p);
    out.column_scales = Eigen::VectorXd::Ones(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        if (data.intercept) out.column_means[j] = data.X.col(j).mean();
        out.X.col(j).array() -= out.column_means[j];
        const double norm = out.X.col(j).norm();
        if (norm == 0.0)
            throw ValidationError("cannot standardize constant column '" + data.column_names[j] + "'");
        out.column_scales[j] = norm;
        out.X.col(j) /= norm;
    }
    out.standardized = true;
    return out;
}

Eigen::VectorXd to_original_scale(const Dataset& data, const Eigen::VectorXd& beta)
{
    if (!data.standardized) return beta;
    return beta.cwiseQuotient(data.column_scales);
}

double original_intercept(const Dataset& data, const Eigen::VectorXd& beta, double intercept)
{
    if (!data.standardized) return intercept;
    return intercept - to_original_scale(data, beta).dot(data.column_means);
}

Dataset subset_rows(const Dataset& data, std::span<const int> rows)
{
    Dataset out;
    out.family = data.family;
    out.intercept = data.intercept;
    out.column_names = data.column_names;
    out.X.resize(static_cast<Eigen::Index>(rows.size()), data.p());
    out.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.X.row(static_cast<Eigen::Index>(i)) = data.X.row(rows[i]);
        out.y[static_cast<Eigen::Index>(i)] = data.y[rows[i]];
    }
    return out;
}

double gaussian_intercept(const Dataset& data, const Eigen::VectorXd& beta)
{
    if (!data.intercept) return 0.0;
    return data.y.mean() - data.X.colwise().mean().dot(beta);
}

std::string_view likelihood_name(Likelihood family)
{
    return family == Likelihood::Gaussian ? "gaussian" : "binomial";
}

Likelihood likelihood_from_name(std::string_view name)
{
    if (name == "gaussian") return Likelihood::Gaussian;
    if (name == "binomial") return Likelihood::Binomial;
    throw ValidationError("unknown likelihood family '" + std::string(name) + "'");
}

} // namespace onestep
