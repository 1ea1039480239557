#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtfer/trainer.hpp"

namespace mtfer {

/// Column order: epoch, lr, train_loss_total, train_acc_<head> x4,
/// train_loss_<head> x4, val_loss_total, val_acc_<head> x4,
/// val_loss_<head> x4 (heads in emotion, gender, race, age order).
/// Heads without labels are written as NA.
std::vector<std::string> metrics_columns();

std::string format_metrics_csv(const TrainHistory& history);
void write_metrics_csv(const TrainHistory& history, const std::filesystem::path& path);

/// Parsed metrics file; cells hold no value for NA.
struct MetricsTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::optional<double>>> rows;

    /// Throws FormatError naming the column when it is absent.
    std::size_t column(std::string_view name) const;
    std::vector<std::optional<double>> series(std::string_view name) const;
};

/// FormatError for an empty file; RowError for a malformed row.
MetricsTable parse_metrics_csv(std::string_view text);

}  // namespace mtfer
