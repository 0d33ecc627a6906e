#include "bnq/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bnq/errors.hpp"

namespace bnq {

Dataset::Dataset(VariableSet variables, Eigen::MatrixXd rows)
    : variables_(std::move(variables)), rows_(std::move(rows)) {
    if (rows_.rows() < 1) throw InsufficientRows("dataset needs at least one row");
    if (static_cast<std::size_t>(rows_.cols()) != variables_.size()) {
        throw VariableMismatch("column count " + std::to_string(rows_.cols()) + " differs from variable count " +
                               std::to_string(variables_.size()));
    }
    if (!rows_.allFinite()) throw std::invalid_argument("dataset contains missing or non-finite values");
}

Dataset Dataset::select_rows(std::span<const int> rows) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), rows_.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = rows_.row(rows[i]);
    return Dataset(variables_, std::move(out));
}

Dataset Dataset::select_columns(const std::vector<std::string>& names) const {
    Eigen::MatrixXd out(rows_.rows(), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = column(names[j]);
    return Dataset(VariableSet(names), std::move(out));
}

Dataset Dataset::standardized() const {
    Eigen::MatrixXd out = rows_;
    const double denom = rows_.rows() > 1 ? static_cast<double>(rows_.rows() - 1) : 1.0;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        const double mean = out.col(j).mean();
        out.col(j).array() -= mean;
        const double sd = std::sqrt(out.col(j).squaredNorm() / denom);
        if (sd == 0.0) throw DegenerateColumn("cannot scale constant column '" + variables_[j] + "'");
        out.col(j) /= sd;
    }
    return Dataset(variables_, std::move(out));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string format_double(double value) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, result.ptr);
}

Dataset read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw SchemaMismatch("empty CSV input");
    const auto header = split_csv_line(line);
    std::vector<std::vector<double>> values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                          std::to_string(fields.size()));
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) {
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
                throw ParseError(line_no, "cannot parse '" + f + "' as a number");
            }
            row.push_back(v);
        }
        values.push_back(std::move(row));
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(header.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        for (std::size_t j = 0; j < header.size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i][j];
        }
    }
    return Dataset(VariableSet(header), std::move(m));
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_dataset_csv(in);
}

void write_dataset_csv(const Dataset& data, std::ostream& out) {
    const auto& names = data.variables().names();
    for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
    out << '\n';
    for (Eigen::Index i = 0; i < data.rows().rows(); ++i) {
        for (Eigen::Index j = 0; j < data.rows().cols(); ++j) out << (j ? "," : "") << format_double(data.rows()(i, j));
        out << '\n';
    }
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_dataset_csv(data, out);
}

}  // namespace bnq
