#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dicke/css_decomposition.hpp"
#include "dicke/dicke_core.hpp"
#include "dicke/unraveling.hpp"

namespace dicke {

/// Decimal with 17 significant digits, enough to round-trip any double.
std::string format_double(double x);

struct ScalingRow {
    int n = 0;
    Strategy strategy = Strategy::Naive;
    double s_max_mean = 0.0, s_max_stderr = 0.0;
    double xi_min_mean = 0.0, xi_min_stderr = 0.0;
};

// Each writer throws IoError naming the path when the file cannot be written.
void write_populations(const std::filesystem::path& path, const std::vector<DickePopulations>& pops);
void write_landscape(const std::filesystem::path& path, const NegativityField& field);
void write_passage(const std::filesystem::path& path, const EtaCurve& curve);
void write_css_weights(const std::filesystem::path& path, const std::vector<CssDecomposition>& decomps);
void write_qt_ensemble(const std::filesystem::path& path, const EnsembleStats& stats);
void write_qt_scaling(const std::filesystem::path& path, const std::vector<ScalingRow>& rows);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace dicke
