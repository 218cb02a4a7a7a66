#pragma once
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace onestep {

enum class Likelihood { Gaussian, Binomial };

/*
 * Design matrix (rows = observations) and response.
 *
 * When standardized is set, column_means / column_scales hold the affine map
 * applied to each raw predictor: x_std = (x_raw - mean) / scale. Standardized
 * columns have mean 0 and unit squared norm. The intercept is never penalized.
 */
struct Dataset
{
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Likelihood family = Likelihood::Gaussian;
    bool intercept = true;
    bool standardized = false;
    Eigen::VectorXd column_means;
    Eigen::VectorXd column_scales;
    std::vector<std::string> column_names;

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }
};

// Validates shapes, finiteness and binary responses; fills default column names.
Dataset make_dataset(Eigen::MatrixXd X, Eigen::VectorXd y,
                     Likelihood family = Likelihood::Gaussian,
                     bool intercept = true,
                     std::vector<std::string> column_names = {});

void validate(const Dataset& data);

// Centers (when the dataset has an intercept) and scales every column to unit norm.
Dataset standardize(const Dataset& data);

// Maps coefficients fitted on a standardized dataset back to raw predictor units.
Eigen::VectorXd to_original_scale(const Dataset& data, const Eigen::VectorXd& beta);
double original_intercept(const Dataset& data, const Eigen::VectorXd& beta, double intercept);

Dataset subset_rows(const Dataset& data, std::span<const int> rows);

// Profiled Gaussian intercept: mean(y) - mean(X) beta, or 0 without intercept.
double gaussian_intercept(const Dataset& data, const Eigen::VectorXd& beta);

std::string_view likelihood_name(Likelihood family);
Likelihood likelihood_from_name(std::string_view name);

} // namespace onestep
