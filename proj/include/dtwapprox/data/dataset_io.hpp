#pragma once

#include <filesystem>

#include "dtwapprox/time_series.hpp"

namespace dtwapprox {

// On-disk dataset layout: a directory holding manifest.json plus one raw
// little-endian f32 file per signal. The manifest carries id, file name,
// length, optional label, subject and split tag per signal, in order.
void save_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& dir);

void save_signal_f32(const std::filesystem::path& path, const Eigen::VectorXf& values);
Eigen::VectorXf load_signal_f32(const std::filesystem::path& path);

// One numeric value per line; blank lines ignored.
Eigen::VectorXf load_signal_csv(const std::filesystem::path& path);

// Dispatch on extension: .csv/.txt text, anything else raw f32.
Eigen::VectorXf load_signal_file(const std::filesystem::path& path);

}  // namespace dtwapprox
