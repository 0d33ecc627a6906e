#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bnq/graph.hpp"

namespace bnq {

/// Continuous observations: one row per observation, one column per variable.
/// No missing values; at least one row.
class Dataset {
public:
    Dataset(VariableSet variables, Eigen::MatrixXd rows);

    const VariableSet& variables() const noexcept { return variables_; }
    const Eigen::MatrixXd& rows() const noexcept { return rows_; }
    std::size_t n() const noexcept { return static_cast<std::size_t>(rows_.rows()); }
    std::size_t p() const noexcept { return static_cast<std::size_t>(rows_.cols()); }

    Eigen::VectorXd column(int index) const { return rows_.col(index); }
    Eigen::VectorXd column(const std::string& name) const { return rows_.col(variables_.index_of(name)); }

    Dataset select_rows(std::span<const int> rows) const;
    Dataset select_columns(const std::vector<std::string>& names) const;
    /// Each column centred and divided by its sample standard deviation.
    Dataset standardized() const;

private:
    VariableSet variables_;
    Eigen::MatrixXd rows_;
};

Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(const Dataset& data, std::ostream& out);
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);

/// Splits a comma-separated line; no quoting support.
std::vector<std::string> split_csv_line(const std::string& line);

/// Shortest text that round-trips a double exactly.
std::string format_double(double value);

}  // namespace bnq
