#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "../adapt/adaptive_loop.hpp"
#include "../baseline/simplex_fosls.hpp"
#include "problems.hpp"

namespace stfosls::experiments {

enum class MeshFamily { prism, simplex };

struct ExperimentConfig
{
    std::string problem = "1d-nonmatching";
    int dim = 1;
    MeshFamily mesh = MeshFamily::prism;
    adapt::RefinementMode mode = adapt::RefinementMode::adaptive;
    Real theta = 0.5;
    Index max_dofs = 0;    // 0 picks 1e5 for d = 1 and 3e5 for d = 2
    int max_steps = 200;
    bool deterministic = true;
    assembly::SolverOptions solver;
    std::string out_dir;   // empty: no files are written
    std::string mesh_dump; // optional path for the final mesh
    std::function<void(const adapt::RunRecord&)> on_step;
};

inline Index default_max_dofs(int dim) { return dim == 1 ? 100000 : 300000; }

inline std::string to_string(MeshFamily m) { return m == MeshFamily::prism ? "prism" : "simplex"; }
inline std::string to_string(adapt::RefinementMode m)
{
    return m == adapt::RefinementMode::uniform ? "uniform" : "adaptive";
}

/// Least-squares slope of log(eta) against log(dofs) over the last `window` points, sign flipped.
inline Real fit_rate(const std::vector<Real>& dofs, const std::vector<Real>& eta, std::size_t window)
{
    if (dofs.size() != eta.size())
        throw InvalidArgument("fit_rate: dofs and estimator lists differ in size");
    if (window < 2 || window > dofs.size())
        throw InvalidArgument("fit_rate: window needs at least 2 of the available points");
    const std::size_t first = dofs.size() - window;
    std::vector<Real> x, y;
    for (std::size_t i = first; i < dofs.size(); ++i) {
        if (!(dofs[i] > 0 && eta[i] > 0))
            throw InvalidArgument("fit_rate: dofs and estimators must be positive");
        x.push_back(std::log(dofs[i]));
        y.push_back(std::log(eta[i]));
    }
    const Real n = static_cast<Real>(window);
    Real mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    Real sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0))
        throw InvalidArgument("fit_rate: degenerate window, all dof counts are equal");
    const Real rate = -sxy / sxx;
    return rate == 0 ? 0 : rate;
}

inline Real fit_rate(const std::vector<adapt::RunRecord>& records, std::size_t window)
{
    std::vector<Real> dofs, eta;
    for (const auto& r : records) {
        dofs.push_back(static_cast<Real>(r.dofs));
        eta.push_back(r.estimator);
    }
    return fit_rate(dofs, eta, window);
}

/// Fit window: the last 5 steps of a uniform run, the last third (at least 8) of an adaptive one.
inline std::size_t default_window(adapt::RefinementMode mode, std::size_t n)
{
    const std::size_t w = mode == adapt::RefinementMode::uniform ? 5 : std::max<std::size_t>(8, n / 3);
    return std::min(w, n);
}

/// `step,dofs,estimator[,error_u],wall_time` with 17 significant digits.
inline void write_csv(std::ostream& os, const std::vector<adapt::RunRecord>& records)
{
    const bool with_error = !records.empty() && records.front().error_u.has_value();
    std::ostringstream s;
    s.precision(17);
    s << "step,dofs,estimator" << (with_error ? ",error_u" : "") << ",wall_time\n";
    for (const auto& r : records) {
        s << r.step << ',' << r.dofs << ',' << r.estimator;
        if (with_error)
            s << ',' << r.error_u.value_or(std::nan(""));
        s << ',' << r.wall_time << '\n';
    }
    os << s.str();
}

namespace detail {

inline std::string fmt(Real v)
{
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

inline std::string xml_escape(const std::string& in)
{
    std::string out;
    for (char c : in) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace detail

/// Static SVG 1.1 log-log plot of the estimator against the DoFs, with decade ticks and a
/// triangle of slope -rate under the last segment of the fit window.
inline void write_svg(std::ostream& os, const std::vector<adapt::RunRecord>& records, const std::string& title,
                      std::optional<Real> rate = std::nullopt, std::size_t window = 0)
{
    if (records.empty())
        throw InvalidArgument("write_svg: no records");
    const Real w = 640, h = 480, left = 80, right = 20, top = 40, bottom = 60;
    Real x0 = std::log10(static_cast<Real>(records.front().dofs)), x1 = x0;
    Real y0 = std::log10(records.front().estimator), y1 = y0;
    for (const auto& r : records) {
        x0 = std::min(x0, std::log10(static_cast<Real>(r.dofs)));
        x1 = std::max(x1, std::log10(static_cast<Real>(r.dofs)));
        y0 = std::min(y0, std::log10(r.estimator));
        y1 = std::max(y1, std::log10(r.estimator));
    }
    x0 = std::floor(x0);
    x1 = std::max(std::ceil(x1), x0 + 1);
    y0 = std::floor(y0);
    y1 = std::max(std::ceil(y1), y0 + 1);
    auto px = [&](Real lx) { return left + (lx - x0) / (x1 - x0) * (w - left - right); };
    auto py = [&](Real ly) { return h - bottom - (ly - y0) / (y1 - y0) * (h - top - bottom); };
    using detail::fmt;

    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << w << "\" height=\"" << h
       << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
       << detail::xml_escape(title) << "</text>\n";
    os << "<g stroke=\"#ccc\" stroke-width=\"1\">\n";
    for (Real d = x0; d <= x1; ++d)
        os << "<line x1=\"" << fmt(px(d)) << "\" y1=\"" << fmt(py(y0)) << "\" x2=\"" << fmt(px(d)) << "\" y2=\""
           << fmt(py(y1)) << "\"/>\n";
    for (Real d = y0; d <= y1; ++d)
        os << "<line x1=\"" << fmt(px(x0)) << "\" y1=\"" << fmt(py(d)) << "\" x2=\"" << fmt(px(x1)) << "\" y2=\""
           << fmt(py(d)) << "\"/>\n";
    os << "</g>\n<g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (Real d = x0; d <= x1; ++d)
        os << "<text x=\"" << fmt(px(d)) << "\" y=\"" << fmt(py(y0) + 18) << "\" text-anchor=\"middle\">1e"
           << static_cast<int>(d) << "</text>\n";
    for (Real d = y0; d <= y1; ++d)
        os << "<text x=\"" << fmt(px(x0) - 8) << "\" y=\"" << fmt(py(d) + 4) << "\" text-anchor=\"end\">1e"
           << static_cast<int>(d) << "</text>\n";
    os << "<text x=\"" << fmt((px(x0) + px(x1)) / 2) << "\" y=\"" << h - 16 << "\" text-anchor=\"middle\">dofs</text>\n"
       << "<text x=\"20\" y=\"" << fmt((py(y0) + py(y1)) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
       << fmt((py(y0) + py(y1)) / 2) << ")\">estimator</text>\n</g>\n";
    os << "<rect x=\"" << fmt(px(x0)) << "\" y=\"" << fmt(py(y1)) << "\" width=\"" << fmt(px(x1) - px(x0))
       << "\" height=\"" << fmt(py(y0) - py(y1)) << "\" fill=\"none\" stroke=\"black\"/>\n";

    os << "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < records.size(); ++i)
        os << (i ? " " : "") << fmt(px(std::log10(static_cast<Real>(records[i].dofs)))) << ','
           << fmt(py(std::log10(records[i].estimator)));
    os << "\"/>\n<g fill=\"#1f4e9c\">\n";
    for (const auto& r : records)
        os << "<circle cx=\"" << fmt(px(std::log10(static_cast<Real>(r.dofs)))) << "\" cy=\""
           << fmt(py(std::log10(r.estimator))) << "\" r=\"3\"/>\n";
    os << "</g>\n";

    if (rate && window >= 2 && window <= records.size()) {
        // Triangle below the fitted segment, its hypotenuse parallel to the fitted line.
        const auto& a = records[records.size() - window];
        const auto& b = records.back();
        const Real la = std::log10(static_cast<Real>(a.dofs)), lb = std::log10(static_cast<Real>(b.dofs));
        const Real run = (lb - la) / 2;
        const Real sx = la + run / 2;
        const Real sy = std::log10(std::min(a.estimator, b.estimator)) - 0.1 * (y1 - y0) + *rate * run;
        const Real ex = sx + run, ey = sy - *rate * run;
        os << "<polygon fill=\"none\" stroke=\"#b22\" stroke-width=\"1.5\" points=\"" << fmt(px(sx)) << ','
           << fmt(py(sy)) << ' ' << fmt(px(ex)) << ',' << fmt(py(ey)) << ' ' << fmt(px(sx)) << ',' << fmt(py(ey))
           << "\"/>\n<text x=\"" << fmt(px(sx) - 6) << "\" y=\"" << fmt((py(sy) + py(ey)) / 2 + 4)
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#b22\">" << fmt(*rate)
           << "</text>\n";
    }
    os << "</svg>\n";
}

struct RunResult
{
    std::vector<adapt::RunRecord> records;
    std::optional<Real> rate; // fitted over the default window, when there are at least 2 steps
    std::size_t window = 0;
    std::string csv_path;
    std::string svg_path;
};

namespace detail {

inline void validate(const ExperimentConfig& c)
{
    if (c.dim != 1 && c.dim != 2)
        throw InvalidArgument("dimension must be 1 or 2");
    if (c.mesh == MeshFamily::simplex && c.dim != 1)
        throw InvalidArgument("the simplex mesh family is only available for d = 1");
    const auto& info = problem_info(c.problem);
    if (info.dim != 0 && info.dim != c.dim)
        throw InvalidArgument("problem '" + c.problem + "' is defined for d = " + std::to_string(info.dim));
    if (!(c.theta > 0 && c.theta <= 1))
        throw InvalidArgument("theta must lie in (0, 1]");
    if (c.max_dofs < 0)
        throw InvalidArgument("max_dofs must not be negative");
}

template <class Writer>
void write_file(const std::string& path, Writer&& w)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw Error("cannot open '" + path + "' for writing");
    w(f);
    f.flush();
    if (!f)
        throw Error("failed writing '" + path + "'");
}

template <int D>
std::vector<adapt::RunRecord> run_prism(const ExperimentConfig& c, const adapt::LoopOptions& opt)
{
    adapt::PrismDiscretization<D> disc(make_problem<D>(c.problem), mesh::initial_prism_mesh<D>(1.0));
    auto records = adapt::adaptive_loop(disc, opt);
    if (!c.mesh_dump.empty())
        write_file(c.mesh_dump, [&](std::ostream& os) { disc.mesh().dump(os); });
    return records;
}

} // namespace detail

/// Runs one experiment; writes `<problem>-<mesh>-<mode>.csv` and `.svg` into out_dir if set.
inline RunResult run(const ExperimentConfig& c)
{
    detail::validate(c);
    adapt::LoopOptions opt;
    opt.mode = c.mode;
    opt.theta = c.theta;
    opt.max_dofs = c.max_dofs > 0 ? c.max_dofs : default_max_dofs(c.dim);
    opt.max_steps = c.max_steps;
    opt.deterministic = c.deterministic;
    opt.solver = c.solver;
    opt.on_step = c.on_step;

    RunResult out;
    if (c.mesh == MeshFamily::simplex) {
        if (!c.mesh_dump.empty())
            throw InvalidArgument("mesh dumps are only available for prismatic meshes");
        baseline::SimplexDiscretization disc(make_problem<1>(c.problem), mesh::nvb_initial(1.0));
        out.records = adapt::adaptive_loop(disc, opt);
    } else if (c.dim == 1) {
        out.records = detail::run_prism<1>(c, opt);
    } else {
        out.records = detail::run_prism<2>(c, opt);
    }
    out.window = default_window(c.mode, out.records.size());
    if (out.window >= 2)
        out.rate = fit_rate(out.records, out.window);

    if (!c.out_dir.empty()) {
        std::filesystem::create_directories(c.out_dir);
        const std::string stem = c.problem + "-" + to_string(c.mesh) + "-" + to_string(c.mode);
        out.csv_path = (std::filesystem::path(c.out_dir) / (stem + ".csv")).string();
        out.svg_path = (std::filesystem::path(c.out_dir) / (stem + ".svg")).string();
        detail::write_file(out.csv_path, [&](std::ostream& os) { write_csv(os, out.records); });
        detail::write_file(out.svg_path,
                           [&](std::ostream& os) { write_svg(os, out.records, stem, out.rate, out.window); });
    }
    return out;
}

} // namespace stfosls::experiments
