#include "dicke/csv_io.hpp"

#include <cstdio>
#include <fstream>

#include "dicke/errors.hpp"

namespace dicke {

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

class CsvFile {
public:
    CsvFile(const std::filesystem::path& path, const std::string& header) : path_(path), out_(path) {
        if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
        out_ << header << '\n';
    }

    template <class... Cols>
    void row(const Cols&... cols) {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(cols), first = false), ...);
        out_ << '\n';
    }

    ~CsvFile() noexcept(false) {
        out_.close();
        if (!out_ && std::uncaught_exceptions() == 0) throw IoError("failed writing '" + path_.string() + "'");
    }

private:
    static std::string cell(double x) { return format_double(x); }
    static std::string cell(int x) { return std::to_string(x); }
    static std::string cell(std::string_view s) { return std::string(s); }

    std::filesystem::path path_;
    std::ofstream out_;
};

}  // namespace

void write_populations(const std::filesystem::path& path, const std::vector<DickePopulations>& pops) {
    CsvFile f(path, "t,m,prob");
    for (const DickePopulations& p : pops)
        for (int m = 0; m <= p.n(); ++m) f.row(p.time, m, p.probs[m]);
}

void write_landscape(const std::filesystem::path& path, const NegativityField& field) {
    CsvFile f(path, "t,eta,log10_negativity");
    for (std::size_t i = 0; i < field.t_grid.size(); ++i)
        for (std::size_t j = 0; j < field.eta_grid.size(); ++j) f.row(field.t_grid[i], field.eta_grid[j], field.values[i][j]);
}

void write_passage(const std::filesystem::path& path, const EtaCurve& curve) {
    CsvFile f(path, "t,eta,negativity");
    for (std::size_t i = 0; i < curve.t_grid.size(); ++i) f.row(curve.t_grid[i], curve.eta[i], curve.negativity[i]);
}

void write_css_weights(const std::filesystem::path& path, const std::vector<CssDecomposition>& decomps) {
    CsvFile f(path, "t,a,theta_a,P_a");
    for (const CssDecomposition& d : decomps) {
        const std::vector<double> th = d.thetas();
        const std::vector<double> w = d.weights_double();
        for (int a = 0; a <= d.n; ++a) f.row(d.time, a, th[a], w[a]);
    }
}

void write_qt_ensemble(const std::filesystem::path& path, const EnsembleStats& s) {
    CsvFile f(path, "t,te_mean,te_stderr,xi_mean,xi_stderr,mean_excitation");
    for (std::size_t i = 0; i < s.times.size(); ++i)
        f.row(s.times[i], s.te_mean[i], s.te_stderr[i], s.xi_mean[i], s.xi_stderr[i], s.mean_excitation[i]);
}

void write_qt_scaling(const std::filesystem::path& path, const std::vector<ScalingRow>& rows) {
    CsvFile f(path, "n,strategy,s_max_mean,s_max_stderr,xi_min_mean,xi_min_stderr");
    for (const ScalingRow& r : rows)
        f.row(r.n, to_string(r.strategy), r.s_max_mean, r.s_max_stderr, r.xi_min_mean, r.xi_min_stderr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    out.close();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace dicke
