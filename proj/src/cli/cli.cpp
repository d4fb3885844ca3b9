#include "conexit/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
// Boost 1.74 pchip.hpp calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <memory>
#include <fstream>
#include <ostream>
#include <sstream>
#include <utility>

#include "conexit/bm_exit.hpp"
#include "conexit/cone.hpp"
#include "conexit/errors.hpp"
#include "conexit/ibm_exit.hpp"
#include "conexit/monte_carlo.hpp"
#include "conexit/spectrum.hpp"

namespace conexit::cli {

using Json = nlohmann::ordered_json;

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    const double a = std::fabs(v);
    const auto style = a < 1e-4 || a >= 1e16 ? std::chars_format::scientific : std::chars_format::fixed;
    char buf[400];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, style);
    return std::string(buf, r.ptr);
}

namespace {

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(item);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

// JSON has no inf/nan; those go out as strings.
Json jnum(double v) { return std::isfinite(v) ? Json(v) : Json(format_number(v)); }

Json grid_json(const Grid& g) {
    if (g.empty()) return nullptr;
    if (!g.values.empty()) {
        Json a = Json::array();
        for (double v : g.values) a.push_back(jnum(v));
        return a;
    }
    return Json{{"start", g.start}, {"stop", g.stop}, {"count", g.count}, {"spacing", g.log ? "log" : "linear"}};
}

}  // namespace

std::vector<double> Grid::points() const {
    std::vector<double> p = values;
    if (p.empty() && count > 0) {
        if (count == 1) {
            p.push_back(start);
        } else {
            for (int i = 0; i < count; ++i) {
                const double f = static_cast<double>(i) / (count - 1);
                p.push_back(log ? std::exp(std::log(start) + f * (std::log(stop) - std::log(start)))
                                : start + f * (stop - start));
            }
            p.back() = stop;
        }
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!std::isfinite(p[i])) throw std::invalid_argument("grid values must be finite");
        if (i > 0 && !(p[i] > p[i - 1])) throw std::invalid_argument("grid must be strictly increasing");
    }
    return p;
}

Grid parse_grid(const std::string& text) {
    Grid g;
    if (text.find(':') == std::string::npos) {
        for (const auto& item : split(text, ',')) g.values.push_back(parse_double(item));
        if (g.values.empty()) throw std::invalid_argument("empty grid");
        return g;
    }
    const auto parts = split(text, ':');
    if (parts.size() < 3 || parts.size() > 4)
        throw std::invalid_argument("range grid must be start:stop:count[:log|:linear], got '" + text + "'");
    g.start = parse_double(parts[0]);
    g.stop = parse_double(parts[1]);
    const double count = parse_double(parts[2]);
    if (!(count >= 1.0) || count != std::floor(count) || count > 1e6)
        throw std::invalid_argument("grid count must be a positive integer");
    g.count = static_cast<int>(count);
    if (parts.size() == 4) {
        if (parts[3] == "log") g.log = true;
        else if (parts[3] != "linear" && parts[3] != "lin") throw std::invalid_argument("grid spacing must be log or linear");
    }
    if (g.log && !(g.start > 0.0)) throw std::invalid_argument("log grid needs a positive start");
    if (g.count > 1 && !(g.stop > g.start)) throw std::invalid_argument("grid must be strictly increasing");
    return g;
}

void RunConfig::validate() const {
    static const std::vector<std::string> subs{"spectrum", "density", "tail", "survival",
                                               "asymptote", "simulate", "compare"};
    if (std::find(subs.begin(), subs.end(), subcommand) == subs.end())
        throw std::invalid_argument("unknown subcommand '" + subcommand + "'");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
    if (terms < 0) throw std::invalid_argument("terms must be >= 0");
    if (n < 1) throw std::invalid_argument("N must be at least 1");
    if (!(rho > 0.0) || !std::isfinite(rho)) throw std::invalid_argument("rho must be positive");
    if (process != "bm" && process != "ibm") throw std::invalid_argument("process must be bm or ibm");
    if (quantity != "exit" && quantity != "time") throw std::invalid_argument("quantity must be exit or time");
    if (format != "csv" && format != "json") throw std::invalid_argument("format must be csv or json");
    if (!(window_hi > window_lo) || !(window_lo > 0.0)) throw std::invalid_argument("KS window needs 0 < lo < hi");
    if (fit_lo.has_value() != fit_hi.has_value()) throw std::invalid_argument("fit range needs both ends");
    if (!(slope_tol > 0.0)) throw std::invalid_argument("slope tolerance must be positive");
    r.points();
    t.points();
}

std::string RunConfig::to_json() const {
    Json j;
    j["subcommand"] = subcommand;
    j["cone"] = cone;
    j["rho"] = rho;
    j["theta"] = theta;
    j["process"] = process;
    j["quantity"] = quantity;
    j["r"] = grid_json(r);
    j["t"] = grid_json(t);
    j["tol"] = tol;
    j["terms"] = terms;
    j["N"] = n;
    j["h"] = h;
    j["h_clock"] = h_clock;
    j["seed"] = seed;
    j["workers"] = workers;
    j["format"] = format;
    j["output"] = output;
    j["input"] = input;
    j["window"] = {window_lo, window_hi};
    j["fit"] = fit_lo ? Json{*fit_lo, *fit_hi} : Json(nullptr);
    j["slope_tol"] = slope_tol;
    return j.dump();
}

namespace {

struct Context {
    const RunConfig& cfg;
    std::ostream& out;
    ConeFamily cone;
    PolarPoint start;
    SeriesOptions opt;
};

PolarPoint resolve_start(const ConeFamily& cone, const RunConfig& c) {
    const double theta = c.theta == "bisector" ? cone.bisector() : parse_angle(c.theta);
    return {c.rho, theta};
}

void emit_table(const Context& ctx, const std::vector<std::string>& columns,
                const std::vector<std::vector<double>>& rows, const Json& meta) {
    Json config = Json::parse(ctx.cfg.to_json());
    if (ctx.cfg.format == "json") {
        Json j;
        j["config"] = config;
        for (auto it = meta.begin(); it != meta.end(); ++it) j[it.key()] = it.value();
        j["columns"] = columns;
        Json data = Json::array();
        for (const auto& row : rows) {
            Json r = Json::array();
            for (double v : row) r.push_back(jnum(v));
            data.push_back(r);
        }
        j["rows"] = data;
        ctx.out << j.dump(2) << '\n';
        return;
    }
    Json head;
    head["config"] = config;
    for (auto it = meta.begin(); it != meta.end(); ++it) head[it.key()] = it.value();
    ctx.out << "# " << head.dump() << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) ctx.out << (i ? "," : "") << columns[i];
    ctx.out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) ctx.out << (i ? "," : "") << format_number(row[i]);
        ctx.out << '\n';
    }
}

// quantity,value listing (CSV) or a flat object (JSON).
void emit_record(const Context& ctx, const Json& record) {
    Json config = Json::parse(ctx.cfg.to_json());
    if (ctx.cfg.format == "json") {
        Json j;
        j["config"] = config;
        j["result"] = record;
        ctx.out << j.dump(2) << '\n';
        return;
    }
    ctx.out << "# " << Json{{"config", config}}.dump() << '\n' << "quantity,value\n";
    for (auto it = record.begin(); it != record.end(); ++it) {
        const Json& v = it.value();
        std::string s;
        if (v.is_number_float()) s = format_number(v.get<double>());
        else if (v.is_string()) s = v.get<std::string>();
        else s = v.dump();
        ctx.out << it.key() << ',' << s << '\n';
    }
}

std::vector<double> require_grid(const Grid& g, const char* name) {
    if (g.empty()) throw std::invalid_argument(std::string("--") + name + " is required");
    return g.points();
}

int cmd_spectrum(const Context& ctx) {
    const int count = ctx.cfg.terms > 0 ? ctx.cfg.terms : 10;
    const Spectrum s(ctx.cone, count);
    std::vector<std::vector<double>> rows;
    for (const Mode& m : s.modes())
        rows.push_back({double(m.index), m.degree, m.eigenvalue, m.alpha, m.p, m.boundary_functional,
                        m.interior_functional});
    emit_table(ctx, {"j", "degree", "lambda", "alpha", "p", "S", "D"}, rows, Json{{"p1", principal_exponent(ctx.cone)}});
    return kExitOk;
}

int cmd_density(const Context& ctx) {
    const auto grid = require_grid(ctx.cfg.r, "r");
    const Spectrum& s = cached_spectrum(ctx.cone);
    std::vector<std::vector<double>> rows;
    if (ctx.cfg.process == "bm") {
        for (double r : grid) rows.push_back({r, exit_radial_density_bridged(s, ctx.start, r, ctx.opt)});
    } else {
        const ClockKernel k(s, ctx.start);
        for (double r : grid) rows.push_back({r, ibm_radial_density_bridged(k, r, ctx.opt)});
    }
    emit_table(ctx, {"r", "density"}, rows, Json::object());
    return kExitOk;
}

int cmd_tail(const Context& ctx) {
    const auto grid = require_grid(ctx.cfg.r, "r");
    const Spectrum& s = cached_spectrum(ctx.cone);
    const double rho = ctx.start.rho;
    std::vector<std::vector<double>> rows;
    Json meta;
    if (ctx.cfg.process == "bm") {
        const TailAsymptote a = bm_tail_asymptote(s, ctx.start);
        const auto w = diagonal_window(rho, ctx.opt.min_gap);
        for (double r : grid) {
            if (!(r > 0.0)) throw std::invalid_argument("tail radius must be positive");
            double v;
            if (r >= w.hi) {
                v = exit_radial_tail(s, ctx.start, r, ctx.opt);
            } else {
                const double far = std::max(50.0 * rho, 4.0 * r);
                v = exit_radial_probability(s, ctx.start, r, far, ctx.opt) + exit_radial_tail(s, ctx.start, far, ctx.opt);
            }
            rows.push_back({r, v, a.constant * std::pow(r, -a.exponent)});
        }
        meta = {{"asymptote_constant", a.constant}, {"asymptote_exponent", a.exponent}};
    } else {
        const ClockKernel k(s, ctx.start);
        const IbmAsymptote a = ibm_asymptote(s, ctx.start);
        for (double r : grid) {
            const double asym = r >= 10.0 * rho ? ibm_tail(a, rho, r) : std::nan("");
            rows.push_back({r, ibm_radial_tail(k, r, ctx.opt), asym});
        }
        meta = {{"regime", to_string(a.regime)},
                {"asymptote_constant", a.constant},
                {"asymptote_exponent", a.tail_exponent},
                {"log_correction", a.log_correction}};
    }
    emit_table(ctx, {"r", "tail", "asymptote"}, rows, meta);
    return kExitOk;
}

int cmd_survival(const Context& ctx) {
    if (ctx.cfg.process != "bm") throw std::invalid_argument("survival is tabulated for --process bm only");
    const auto grid = require_grid(ctx.cfg.t, "t");
    const Spectrum& s = cached_spectrum(ctx.cone);
    const double c = survival_asymptote(s, ctx.start);
    const double e = 0.5 * principal_exponent(ctx.cone);
    std::vector<std::vector<double>> rows;
    for (double t : grid) {
        if (!(t > 0.0)) throw std::invalid_argument("times must be positive");
        rows.push_back({t, survival(s, ctx.start, t, ctx.opt), c * std::pow(t, -e)});
    }
    emit_table(ctx, {"t", "survival", "asymptote"}, rows,
               Json{{"C", c}, {"exponent", e}, {"mean_exit_time", jnum(mean_exit_time(s, ctx.start, ctx.opt))}});
    return kExitOk;
}

int cmd_asymptote(const Context& ctx) {
    const Spectrum& s = cached_spectrum(ctx.cone);
    const TailAsymptote bm = bm_tail_asymptote(s, ctx.start);
    const IbmAsymptote ibm = ibm_asymptote(s, ctx.start);
    const IbmSurvivalLaw law = ibm_survival_law(ctx.cone);
    Json r;
    r["cone"] = ctx.cone.describe();
    r["rho"] = ctx.start.rho;
    r["theta"] = ctx.start.theta;
    r["p1"] = principal_exponent(ctx.cone);
    r["regime"] = to_string(ibm.regime);
    r["constant"] = ibm.constant;
    r["density_exponent"] = ibm.density_exponent;
    r["tail_exponent"] = ibm.tail_exponent;
    r["log_correction"] = ibm.log_correction;
    r["survival_exponent"] = law.exponent;
    r["bm_tail_constant"] = bm.constant;
    r["bm_tail_exponent"] = bm.exponent;
    r["bm_survival_constant"] = survival_asymptote(s, ctx.start);
    r["bm_survival_exponent"] = 0.5 * principal_exponent(ctx.cone);
    r["bm_mean_exit_time"] = jnum(mean_exit_time(s, ctx.start, ctx.opt));
    emit_record(ctx, r);
    return kExitOk;
}

SampleKind kind_of(const RunConfig& c) {
    if (c.process == "bm") return SampleKind::BmExit;
    return c.quantity == "time" ? SampleKind::IbmExitTime : SampleKind::IbmExit;
}

McParams mc_params(const RunConfig& c) {
    McParams mc;
    mc.h = c.h;
    mc.h_clock = c.h_clock;
    mc.seed = c.seed;
    mc.workers = c.workers;
    return mc;
}

int cmd_simulate(const Context& ctx) {
    const SampleBatch b = simulate(kind_of(ctx.cfg), ctx.cone, ctx.start, mc_params(ctx.cfg), ctx.cfg.n);
    if (ctx.cfg.format == "csv") {
        b.write_csv(ctx.out);
        return kExitOk;
    }
    Json j;
    j["config"] = Json::parse(ctx.cfg.to_json());
    j["batch"] = Json::parse(b.header_json());
    j["columns"] = {"exit_time", "exit_radius", "boundary_coord", "stream", "path_index"};
    Json rows = Json::array();
    for (const Sample& s : b.samples) rows.push_back({s.exit_time, s.exit_radius, s.boundary_coord, s.stream, s.path_index});
    j["rows"] = rows;
    ctx.out << j.dump(2) << '\n';
    return kExitOk;
}

// CDF of the model radial law restricted to [a, b], up to normalisation:
// cumulative probability at log-spaced nodes, monotone cubic in log r.
std::function<double(double)> window_cdf(const std::function<double(double, double)>& prob, double a, double b) {
    constexpr int kNodes = 97;
    std::vector<double> x(kNodes), y(kNodes);
    const double la = std::log(a), lb = std::log(b);
    for (int i = 0; i < kNodes; ++i) x[i] = la + (lb - la) * i / (kNodes - 1);
    y[0] = 0.0;
    for (int i = 1; i < kNodes; ++i) y[i] = y[i - 1] + prob(std::exp(x[i - 1]), std::exp(x[i]));
    auto spline = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(std::move(x), std::move(y));
    return [spline, la, lb](double r) {
        const double u = std::clamp(std::log(r), la, lb);
        return (*spline)(u);
    };
}

int cmd_compare(const Context& ctx) {
    const RunConfig& c = ctx.cfg;
    SampleBatch b;
    if (c.input.empty()) {
        b = simulate(kind_of(c), ctx.cone, ctx.start, mc_params(c), c.n);
    } else {
        std::ifstream in(c.input, std::ios::binary);
        if (!in) throw std::invalid_argument("cannot open sample file '" + c.input + "'");
        b = SampleBatch::read_csv(in);
    }
    const ConeFamily cone = parse_cone(b.cone);
    const PolarPoint x = b.start;
    const Spectrum& s = cached_spectrum(cone);
    const bool times = b.kind == SampleKind::IbmExitTime || (b.kind == SampleKind::BmExit && c.quantity == "time");
    const bool ibm = b.kind != SampleKind::BmExit;
    const double n = static_cast<double>(b.samples.size());

    Json r;
    r["kind"] = to_string(b.kind);
    r["quantity"] = times ? "time" : "exit";
    r["cone"] = b.cone;
    r["N"] = b.samples.size();
    r["resampled"] = b.resampled;
    r["h"] = b.params.h;
    r["seed"] = b.params.seed;
    bool pass = true;

    std::vector<double> values = times ? b.times() : b.radii();

    // distributional agreement
    if (!times) {
        const double a = c.window_lo * x.rho, bb = c.window_hi * x.rho;
        std::function<double(double, double)> prob;
        std::shared_ptr<ClockKernel> kernel;
        if (ibm) {
            kernel = std::make_shared<ClockKernel>(s, x);
            prob = [&](double u, double v) { return ibm_radial_probability(*kernel, u, v, ctx.opt); };
        } else {
            prob = [&](double u, double v) { return exit_radial_probability(s, x, u, v, ctx.opt); };
        }
        const auto cdf = window_cdf(prob, a, bb);
        std::size_t used = 0;
        const double d = ks_distance_window(values, cdf, a, bb, &used);
        const double threshold = 1.63 / std::sqrt(double(used)) + 0.05 * std::sqrt(b.params.h);
        r["ks_window_lo"] = a;
        r["ks_window_hi"] = bb;
        r["ks_count"] = used;
        r["ks_statistic"] = d;
        r["ks_threshold"] = threshold;
        r["ks_pass"] = d < threshold;
        pass = pass && d < threshold;
    } else if (!ibm) {
        const SurvivalCurve curve(s, x);
        const double d = ks_distance(values, [&](double t) { return 1.0 - curve(t); });
        const double threshold = 1.63 / std::sqrt(n) + 0.05 * std::sqrt(b.params.h);
        r["ks_count"] = b.samples.size();
        r["ks_statistic"] = d;
        r["ks_threshold"] = threshold;
        r["ks_pass"] = d < threshold;
        pass = pass && d < threshold;
    }

    // tail exponent
    double lo, hi;
    if (c.fit_lo) {
        lo = *c.fit_lo * (times ? 1.0 : x.rho);
        hi = *c.fit_hi * (times ? 1.0 : x.rho);
    } else if (!times) {
        lo = 8.0 * x.rho;
        hi = 128.0 * x.rho;
    } else {
        // the decade and a bit above the level where 1% of the paths survive
        std::vector<double> sorted(values);
        std::sort(sorted.begin(), sorted.end());
        lo = sorted[static_cast<std::size_t>(0.99 * (n - 1))];
        hi = 16.0 * lo;
    }
    double expected;
    bool log_corr = false;
    if (!times) {
        if (ibm) {
            const IbmAsymptote a = ibm_asymptote(s, x);
            expected = a.tail_exponent;
            log_corr = a.log_correction;
        } else {
            expected = principal_exponent(cone);
        }
    } else if (ibm) {
        const IbmSurvivalLaw law = ibm_survival_law(cone);
        expected = law.exponent;
        log_corr = law.log_correction;
    } else {
        expected = 0.5 * principal_exponent(cone);
    }
    r["fit_lo"] = lo;
    r["fit_hi"] = hi;
    r["expected_slope"] = -expected;
    r["log_correction"] = log_corr;
    r["slope_tol"] = c.slope_tol;
    try {
        const TailFit f = estimate_tail_exponent(values, lo, hi);
        const bool ok = std::fabs(f.slope + expected) <= c.slope_tol;
        r["slope"] = f.slope;
        r["slope_stderr"] = jnum(f.std_error);
        r["fit_quality"] = f.fit_quality;
        r["tail_count"] = f.tail_count;
        r["slope_pass"] = ok;
        pass = pass && ok;
    } catch (const InsufficientData& e) {
        r["slope_error"] = e.what();
        r["slope_pass"] = false;
        pass = false;
    }
    r["pass"] = pass;
    emit_record(ctx, r);
    return pass ? kExitOk : kExitCheckFailed;
}

int dispatch(const RunConfig& c, std::ostream& out) {
    if (c.cone.empty()) throw std::invalid_argument("--cone is required");
    const ConeFamily cone = parse_cone(c.cone);
    SeriesOptions opt;
    opt.tol = c.tol;
    if (c.subcommand != "spectrum") opt.max_terms = c.terms;
    Context ctx{c, out, cone, resolve_start(cone, c), opt};
    if (c.subcommand != "spectrum") cone.validate_point(ctx.start);
    if (c.subcommand == "spectrum") return cmd_spectrum(ctx);
    if (c.subcommand == "density") return cmd_density(ctx);
    if (c.subcommand == "tail") return cmd_tail(ctx);
    if (c.subcommand == "survival") return cmd_survival(ctx);
    if (c.subcommand == "asymptote") return cmd_asymptote(ctx);
    if (c.subcommand == "simulate") return cmd_simulate(ctx);
    return cmd_compare(ctx);
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        config.validate();
        if (config.output.empty()) return dispatch(config, out);
        // write to a buffer first so a failed run leaves no partial file
        std::ostringstream buf;
        const int status = dispatch(config, buf);
        std::ofstream file(config.output, std::ios::binary | std::ios::trunc);
        if (!file) throw std::invalid_argument("cannot open output file '" + config.output + "'");
        file << buf.str();
        if (!file.flush()) throw std::runtime_error("failed writing '" + config.output + "'");
        return status;
    } catch (const NonConvergence& e) {
        err << "conexit: numerical non-convergence: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const InsufficientData& e) {
        err << "conexit: insufficient data: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        err << "conexit: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::domain_error& e) {
        err << "conexit: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::out_of_range& e) {
        err << "conexit: " << e.what() << '\n';
        return kExitConfig;
    }
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    std::string r_text, t_text, window_text, fit_text;
    CLI::App app{"Exit laws of Brownian motion and iterated Brownian motion from cones"};
    app.name("conexit");
    app.require_subcommand(1);
    // -h stays free for the step size
    app.set_help_flag("--help", "print help and exit");
    try {
        cfg.workers = default_workers(1);
    } catch (const std::invalid_argument& e) {
        err << "conexit: " << e.what() << '\n';
        return kExitConfig;
    }

    auto cone_opts = [&](CLI::App* sub, bool with_start) {
        sub->add_option("--cone", cfg.cone, "wedge:a=<rad>, halfspace:n=<int> or cone3d:theta0=<rad>")->required();
        if (with_start) {
            sub->add_option("--rho", cfg.rho, "start radius")->capture_default_str();
            sub->add_option("--theta", cfg.theta, "start angle in radians, or 'bisector'")->capture_default_str();
        }
        sub->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
        sub->add_option("-o,--output", cfg.output, "output file (default: standard output)");
    };
    auto series_opts = [&](CLI::App* sub) {
        sub->add_option("--tol", cfg.tol, "relative series tolerance")->capture_default_str();
        sub->add_option("--terms", cfg.terms, "maximum series terms (0: default cap)")->capture_default_str();
    };
    auto mc_opts = [&](CLI::App* sub) {
        sub->add_option("--process", cfg.process, "bm or ibm")->check(CLI::IsMember({"bm", "ibm"}))->capture_default_str();
        sub->add_option("--quantity", cfg.quantity, "exit (place) or time")
            ->check(CLI::IsMember({"exit", "time"}))
            ->capture_default_str();
        sub->add_option("-N,--samples", cfg.n, "number of paths")->capture_default_str();
        sub->add_option("--h", cfg.h, "walk step variance")->capture_default_str();
        sub->add_option("--h-clock", cfg.h_clock, "IBM clock step variance (0: same as --h)")->capture_default_str();
        sub->add_option("--seed", cfg.seed, "64-bit RNG seed")->capture_default_str();
        sub->add_option("--workers", cfg.workers, "logical workers = RNG streams (env CONEXIT_WORKERS)")
            ->capture_default_str();
    };

    auto* spectrum = app.add_subcommand("spectrum", "eigenvalues, exponents and boundary functionals");
    cone_opts(spectrum, false);
    spectrum->add_option("--terms", cfg.terms, "number of modes (default 10)");

    auto* density = app.add_subcommand("density", "radial exit density over a grid");
    cone_opts(density, true);
    series_opts(density);
    density->add_option("--process", cfg.process, "bm or ibm")->check(CLI::IsMember({"bm", "ibm"}))->capture_default_str();
    density->add_option("--r", r_text, "radii: a,b,c or start:stop:count[:log]")->required();

    auto* tail = app.add_subcommand("tail", "P(|exit point| > r) and its asymptote");
    cone_opts(tail, true);
    series_opts(tail);
    tail->add_option("--process", cfg.process, "bm or ibm")->check(CLI::IsMember({"bm", "ibm"}))->capture_default_str();
    tail->add_option("--r", r_text, "radii: a,b,c or start:stop:count[:log]")->required();

    auto* surv = app.add_subcommand("survival", "P(tau > t) of BM and the constant C(x)");
    cone_opts(surv, true);
    series_opts(surv);
    surv->add_option("--t", t_text, "times: a,b,c or start:stop:count[:log]")->required();

    auto* asym = app.add_subcommand("asymptote", "IBM tail constant, regime and exponents");
    cone_opts(asym, true);
    series_opts(asym);

    auto* sim = app.add_subcommand("simulate", "Monte Carlo exit samples as CSV");
    cone_opts(sim, true);
    mc_opts(sim);

    auto* cmp = app.add_subcommand("compare", "series against Monte Carlo: KS distance and exponent fit");
    cone_opts(cmp, true);
    series_opts(cmp);
    mc_opts(cmp);
    cmp->add_option("--input", cfg.input, "sample file written by simulate (cone and start are taken from it)");
    cmp->add_option("--window", window_text, "KS window lo:hi in units of rho (default 2:64)");
    cmp->add_option("--fit", fit_text, "fit range lo:hi (units of rho for radii, absolute for times)");
    cmp->add_option("--slope-tol", cfg.slope_tol, "tolerance on the fitted slope")->capture_default_str();
    // with --input the cone comes from the file
    cmp->get_option("--cone")->required(false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "conexit: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        for (auto* sub : app.get_subcommands()) cfg.subcommand = sub->get_name();
        if (!r_text.empty()) cfg.r = parse_grid(r_text);
        if (!t_text.empty()) cfg.t = parse_grid(t_text);
        if (!window_text.empty()) {
            const auto p = split(window_text, ':');
            if (p.size() != 2) throw std::invalid_argument("--window must be lo:hi");
            cfg.window_lo = parse_double(p[0]);
            cfg.window_hi = parse_double(p[1]);
        }
        if (!fit_text.empty()) {
            const auto p = split(fit_text, ':');
            if (p.size() != 2) throw std::invalid_argument("--fit must be lo:hi");
            cfg.fit_lo = parse_double(p[0]);
            cfg.fit_hi = parse_double(p[1]);
        }
        if (cfg.subcommand == "compare" && cfg.cone.empty() && !cfg.input.empty()) {
            // the cone and start of a sample file
            std::ifstream in(cfg.input, std::ios::binary);
            std::string line;
            if (!in || !std::getline(in, line) || line.rfind("# ", 0) != 0)
                throw std::invalid_argument("cannot read sample file header from '" + cfg.input + "'");
            const auto j = nlohmann::json::parse(line.substr(2), nullptr, false);
            if (j.is_discarded() || !j.contains("cone")) throw std::invalid_argument("bad sample file header");
            cfg.cone = j["cone"].get<std::string>();
            cfg.rho = j["start"]["rho"].get<double>();
            cfg.theta = format_number(j["start"]["theta"].get<double>());
        }
    } catch (const std::invalid_argument& e) {
        err << "conexit: " << e.what() << '\n';
        return kExitConfig;
    }
    return run(cfg, out, err);
}

}  // namespace conexit::cli
