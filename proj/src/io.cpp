#include <onestep/io.hpp>
#include <onestep/error.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace onestep {
namespace {

std::string trim(std::string_view s)
{
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                           : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string unquote(std::string s)
{
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

std::string cell_ref(int row, const std::string& column)
{
    return "(row " + std::to_string(row) + ", column \"" + column + "\")";
}

double parse_cell(const std::string& cell, int row, const std::string& column)
{
    if (cell.empty() || cell == "NA") throw ValidationError("missing value at " + cell_ref(row, column));
    std::string_view v = cell;
    if (v.front() == '+') v.remove_prefix(1);
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ValidationError("non-numeric value '" + cell + "' at " + cell_ref(row, column));
    if (!std::isfinite(x)) throw ValidationError("non-finite value '" + cell + "' at " + cell_ref(row, column));
    return x;
}

} // namespace

Ingested ingest_csv(const std::filesystem::path& path, const std::string& response, Likelihood family)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open data file '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) throw ValidationError("data file has no header row");
    std::vector<std::string> header = split(line);
    for (auto& h : header) h = unquote(h);

    int response_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c].empty()) throw ValidationError("empty column name in header at position " + std::to_string(c + 1));
        for (std::size_t d = 0; d < c; ++d)
            if (header[d] == header[c]) throw ValidationError("duplicate column name \"" + header[c] + "\"");
        if (header[c] == response) response_col = static_cast<int>(c);
    }
    if (response_col < 0) throw ValidationError("response column \"" + response + "\" not found in header");
    if (header.size() < 2) throw ValidationError("data file has no predictor columns");

    std::vector<std::vector<double>> rows;
    int row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto cells = split(line);
        if (cells.size() != header.size())
            throw ValidationError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                  " fields, expected " + std::to_string(header.size()));
        std::vector<double> values(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) values[c] = parse_cell(cells[c], row, header[c]);
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw ValidationError("data file has no data rows");

    const auto n = static_cast<Eigen::Index>(rows.size());
    Ingested out;
    out.manifest.path = path.string();
    out.manifest.response = response;
    out.manifest.rows = static_cast<int>(n);

    std::vector<int> keep;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (static_cast<int>(c) == response_col) continue;
        bool constant = true;
        for (const auto& r : rows) constant = constant && r[c] == rows.front()[c];
        if (constant) {
            out.manifest.dropped.push_back(header[c]);
        } else {
            keep.push_back(static_cast<int>(c));
            out.manifest.columns.push_back(header[c]);
        }
    }
    if (!out.manifest.dropped.empty()) {
        std::string msg = "dropped constant predictor columns:";
        for (const auto& d : out.manifest.dropped) msg += " " + d;
        out.manifest.warnings.push_back(msg);
    }
    if (keep.empty()) throw ValidationError("no non-constant predictor columns remain");

    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(keep.size()));
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        y[i] = rows[i][response_col];
        for (std::size_t k = 0; k < keep.size(); ++k) X(i, static_cast<Eigen::Index>(k)) = rows[i][keep[k]];
    }
    out.data = make_dataset(std::move(X), std::move(y), family, true, out.manifest.columns);
    return out;
}

nlohmann::ordered_json to_json(const IngestManifest& m)
{
    nlohmann::ordered_json j;
    j["path"] = m.path;
    j["response"] = m.response;
    j["rows"] = m.rows;
    j["columns"] = m.columns;
    j["dropped"] = m.dropped;
    j["warnings"] = m.warnings;
    return j;
}

std::string dump_json(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

void ensure_directory(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw ValidationError("cannot create output directory '" + dir.string() + "'");
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out << text;
    out.close();
    if (!out) throw ValidationError("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace onestep
