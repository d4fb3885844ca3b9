#include "conexit/monte_carlo.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>
#include <variant>

#include "conexit/errors.hpp"
#include "conexit/simd/walk.hpp"

namespace conexit {

using simd::WalkKind;
using simd::WalkRequest;
using simd::WalkResult;

void McParams::validate() const {
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("step size h must be positive");
    if (!(h_clock >= 0.0) || !std::isfinite(h_clock)) throw std::invalid_argument("clock step must be >= 0");
    if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
    if (budget == 0) throw std::invalid_argument("step budget must be positive");
    if (workers == 0) throw std::invalid_argument("need at least one worker");
    if (max_attempts == 0 || max_attempts > 255) throw std::invalid_argument("max_attempts must be in 1..255");
}

std::string_view to_string(SampleKind k) {
    switch (k) {
        case SampleKind::BmExit: return "bm_exit";
        case SampleKind::IbmExit: return "ibm_exit";
        case SampleKind::IbmExitTime: return "ibm_exit_time";
    }
    return "?";
}

SampleKind parse_sample_kind(std::string_view s) {
    if (s == "bm_exit") return SampleKind::BmExit;
    if (s == "ibm_exit") return SampleKind::IbmExit;
    if (s == "ibm_exit_time") return SampleKind::IbmExitTime;
    throw std::invalid_argument("unknown sample kind '" + std::string(s) + "'");
}

namespace {

constexpr std::uint32_t tag(DrawRole role, std::uint32_t attempt, std::uint32_t which = 0) {
    return static_cast<std::uint32_t>(role) | attempt << 8 | which << 16;
}

// Where the walk runs and how its result maps back to the cone.
struct Geometry {
    WalkKind kind = WalkKind::Wedge;
    double angle = 0.0;
    int dim = 2;
    bool halfspace = false;
    double start[3] = {0.0, 0.0, 0.0};
    double offset = 0.0;  // half-spaces: first tangential coordinate of the start

    static Geometry of(const ConeFamily& cone, const PolarPoint& x) {
        if (!(x.rho > 0.0) || !std::isfinite(x.rho)) throw std::invalid_argument("start radius must be positive");
        Geometry g;
        g.dim = cone.dimension();
        const double extent = cone.angular_extent();
        if (const auto* w = std::get_if<Wedge2D>(&cone.variant())) {
            if (!(x.theta > 0.0 && x.theta < extent)) throw std::invalid_argument("start angle outside the wedge");
            g.kind = WalkKind::Wedge;
            g.angle = w->aperture;
            g.start[0] = x.rho * std::cos(x.theta);
            g.start[1] = x.rho * std::sin(x.theta);
            return g;
        }
        if (!(x.theta >= 0.0 && x.theta < extent)) throw std::invalid_argument("start angle outside the cone");
        if (const auto* c = std::get_if<CircularCone3D>(&cone.variant())) {
            g.kind = WalkKind::Cone3d;
            g.angle = c->half_angle;
            g.start[0] = x.rho * std::sin(x.theta);
            g.start[2] = x.rho * std::cos(x.theta);
            return g;
        }
        g.kind = WalkKind::Interval;
        g.halfspace = true;
        g.start[0] = x.rho * std::cos(x.theta);
        g.offset = x.rho * std::sin(x.theta);
        return g;
    }
};

struct Exit {
    double time = 0.0;
    std::vector<double> point;
    double radius = 0.0;
    double coord = 0.0;
};

class Engine {
public:
    Engine(const ConeFamily& cone, const PolarPoint& start, const McParams& mc)
        : geo_(Geometry::of(cone, start)), mc_(mc), key_(RngSpec{mc.seed}.key()) {
        mc_.validate();
        backend_ = simd::default_backend();
    }

    // Draws for paths [first, first + count) of `stream` into out[0, count).
    void run(SampleKind kind, std::uint32_t stream, std::uint64_t first, std::size_t count, Sample* out,
             ExitDraw* draws, std::uint64_t& resampled) const {
        std::vector<std::uint32_t> attempt(count, 0);
        std::vector<std::size_t> pending(count);
        std::iota(pending.begin(), pending.end(), std::size_t{0});
        std::vector<WalkResult> minus, plus, clock;
        while (!pending.empty()) {
            walks(stream, DrawRole::Walk, first, pending, attempt, minus);
            if (kind != SampleKind::BmExit) walks(stream, DrawRole::WalkPlus, first, pending, attempt, plus);
            if (kind == SampleKind::IbmExitTime) clocks(stream, first, pending, attempt, minus, plus, clock);

            std::vector<std::size_t> retry;
            for (std::size_t k = 0; k < pending.size(); ++k) {
                const std::size_t i = pending[k];
                const std::uint64_t path = first + i;
                bool failed = minus[k].exhausted;
                if (kind != SampleKind::BmExit) failed = failed || plus[k].exhausted;
                if (kind == SampleKind::IbmExitTime) failed = failed || clock[k].exhausted;
                if (failed) {
                    if (++attempt[i] >= mc_.max_attempts)
                        throw NonConvergence("path " + std::to_string(path) + " exhausted the step budget " +
                                             std::to_string(mc_.max_attempts) + " times");
                    retry.push_back(i);
                    continue;
                }
                Exit e;
                if (kind == SampleKind::BmExit) {
                    e = finish(minus[k], stream, path, attempt[i], 0);
                } else if (kind == SampleKind::IbmExit) {
                    const int side = ibm_exit_side(minus[k].time, plus[k].time, RngSpec{mc_.seed}, stream, path, attempt[i]);
                    e = side == 0 ? finish(minus[k], stream, path, attempt[i], 0)
                                  : finish(plus[k], stream, path, attempt[i], 1);
                } else {
                    const int side = clock[k].side == 0 ? 0 : 1;
                    e = side == 0 ? finish(minus[k], stream, path, attempt[i], 0)
                                  : finish(plus[k], stream, path, attempt[i], 1);
                    e.time = clock[k].time;
                }
                resampled += attempt[i];
                if (out) out[i] = Sample{e.time, e.radius, e.coord, stream, path};
                if (draws) draws[i] = ExitDraw{e.time, std::move(e.point), e.radius, e.coord, attempt[i] + 1};
            }
            pending.swap(retry);
        }
    }

private:
    void walks(std::uint32_t stream, DrawRole role, std::uint64_t first, const std::vector<std::size_t>& pending,
               const std::vector<std::uint32_t>& attempt, std::vector<WalkResult>& out) const {
        simd::WalkSetup s;
        s.kind = geo_.kind;
        s.h = mc_.h;
        s.kappa = mc_.kappa;
        s.budget = mc_.budget;
        s.key = key_;
        s.stream = stream;
        s.angle = geo_.angle;
        std::vector<WalkRequest> req(pending.size());
        for (std::size_t k = 0; k < pending.size(); ++k) {
            WalkRequest& r = req[k];
            std::copy(std::begin(geo_.start), std::end(geo_.start), r.start);
            r.lo = 0.0;
            r.hi = std::numeric_limits<double>::infinity();
            r.path = static_cast<std::uint32_t>(first + pending[k]);
            r.tag = tag(role, attempt[pending[k]]);
        }
        out.assign(req.size(), WalkResult{});
        simd::run_walks(backend_, s, req, out);
    }

    void clocks(std::uint32_t stream, std::uint64_t first, const std::vector<std::size_t>& pending,
                const std::vector<std::uint32_t>& attempt, const std::vector<WalkResult>& minus,
                const std::vector<WalkResult>& plus, std::vector<WalkResult>& out) const {
        simd::WalkSetup s;
        s.kind = WalkKind::Interval;
        s.h = mc_.clock_step();
        s.kappa = mc_.kappa;
        s.budget = mc_.budget;
        s.key = key_;
        s.stream = stream;
        std::vector<WalkRequest> req(pending.size());
        for (std::size_t k = 0; k < pending.size(); ++k) {
            WalkRequest& r = req[k];
            r.lo = -minus[k].time;
            r.hi = plus[k].time;
            r.path = static_cast<std::uint32_t>(first + pending[k]);
            r.tag = tag(DrawRole::Clock, attempt[pending[k]]);
            // an exhausted BM walk makes the clock meaningless; skip it
            if (minus[k].exhausted || plus[k].exhausted) r.lo = -1.0, r.hi = 1.0, r.start[0] = 1.0;
        }
        out.assign(req.size(), WalkResult{});
        simd::run_walks(backend_, s, req, out);
    }

    Exit finish(const WalkResult& w, std::uint32_t stream, std::uint64_t path, std::uint32_t attempt,
                std::uint32_t which) const {
        Exit e;
        e.time = w.time;
        if (geo_.kind == WalkKind::Wedge) {
            e.point = {w.point[0], w.point[1]};
            e.radius = std::hypot(w.point[0], w.point[1]);
            e.coord = w.side;
            return e;
        }
        if (geo_.kind == WalkKind::Cone3d) {
            e.point = {w.point[0], w.point[1], w.point[2]};
            e.radius = std::sqrt(w.point[0] * w.point[0] + w.point[1] * w.point[1] + w.point[2] * w.point[2]);
            e.coord = std::atan2(w.point[1], w.point[0]);
            return e;
        }
        // half-space: the tangential coordinates are independent BMs run for tau
        const int m = geo_.dim - 1;
        const std::size_t pairs = static_cast<std::size_t>(m + 1) / 2;
        std::vector<PhiloxCounter> ctr(pairs);
        for (std::size_t k = 0; k < pairs; ++k)
            ctr[k] = {static_cast<std::uint32_t>(k), tag(DrawRole::Tangent, attempt, which),
                      static_cast<std::uint32_t>(path), stream};
        std::vector<double> z0(pairs), z1(pairs);
        simd::normal_pairs(simd::Backend::Scalar, ctr, key_, z0, z1);
        const double sd = std::sqrt(w.time);
        e.point.assign(static_cast<std::size_t>(geo_.dim), 0.0);
        double r2 = 0.0;
        for (int k = 0; k < m; ++k) {
            const double z = k % 2 == 0 ? z0[k / 2] : z1[k / 2];
            const double t = (k == 0 ? geo_.offset : 0.0) + sd * z;
            e.point[k] = t;
            r2 += t * t;
        }
        e.radius = std::sqrt(r2);
        e.coord = m == 1 ? (e.point[0] < 0.0 ? 1.0 : 0.0) : std::atan2(e.point[1], e.point[0]);
        return e;
    }

    Geometry geo_;
    McParams mc_;
    PhiloxKey key_;
    simd::Backend backend_;
};

ExitDraw single(SampleKind kind, const ConeFamily& cone, const PolarPoint& x, const McParams& mc,
                std::uint32_t stream, std::uint64_t path) {
    if (path > std::numeric_limits<std::uint32_t>::max()) throw std::invalid_argument("path index exceeds 32 bits");
    Engine engine(cone, x, mc);
    ExitDraw d;
    std::uint64_t resampled = 0;
    engine.run(kind, stream, path, 1, nullptr, &d, resampled);
    return d;
}

std::string format_number(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_number(std::string_view s) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw std::invalid_argument("bad number '" + std::string(s) + "' in sample file");
    return v;
}

std::uint64_t parse_uint(std::string_view s) {
    std::uint64_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw std::invalid_argument("bad integer '" + std::string(s) + "' in sample file");
    return v;
}

constexpr std::string_view kColumns = "exit_time,exit_radius,boundary_coord,stream,path_index";

}  // namespace

ExitDraw sample_bm_exit(const ConeFamily& cone, const PolarPoint& x, const McParams& mc, std::uint32_t stream,
                        std::uint64_t path) {
    return single(SampleKind::BmExit, cone, x, mc, stream, path);
}

ExitDraw sample_ibm_exit(const ConeFamily& cone, const PolarPoint& z, const McParams& mc, std::uint32_t stream,
                         std::uint64_t path) {
    return single(SampleKind::IbmExit, cone, z, mc, stream, path);
}

ExitDraw sample_ibm_exit_time(const ConeFamily& cone, const PolarPoint& z, const McParams& mc, std::uint32_t stream,
                              std::uint64_t path) {
    return single(SampleKind::IbmExitTime, cone, z, mc, stream, path);
}

int ibm_exit_side(double tau_minus, double tau_plus, const RngSpec& rng, std::uint32_t stream, std::uint64_t path,
                  std::uint32_t attempt) {
    if (!(tau_minus > 0.0) || !(tau_plus > 0.0)) throw std::invalid_argument("exit times must be positive");
    const PhiloxCounter w = philox4x32_10(
        {0u, tag(DrawRole::SideCoin, attempt), static_cast<std::uint32_t>(path), stream}, rng.key());
    return uniform_from_words(w[0], w[1]) < tau_plus / (tau_minus + tau_plus) ? 0 : 1;
}

std::uint32_t default_workers(std::uint32_t fallback) {
    if (const char* env = std::getenv("CONEXIT_WORKERS")) {
        std::uint32_t v = 0;
        const std::string_view s(env);
        const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (r.ec == std::errc{} && r.ptr == s.data() + s.size() && v > 0) return v;
        throw std::invalid_argument("CONEXIT_WORKERS must be a positive integer");
    }
    return fallback;
}

SampleBatch simulate(SampleKind kind, const ConeFamily& cone, const PolarPoint& start, const McParams& mc,
                     std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("need N >= 1");
    if (n > std::numeric_limits<std::uint32_t>::max()) throw std::invalid_argument("N exceeds 2^32 - 1");
    const Engine engine(cone, start, mc);

    SampleBatch batch;
    batch.kind = kind;
    batch.cone = cone.describe();
    batch.start = start;
    batch.params = mc;
    batch.samples.resize(n);

    const std::uint32_t workers = mc.workers;
    std::vector<std::uint64_t> resampled(workers, 0);
    std::vector<std::exception_ptr> errors(workers);
    auto work = [&](std::uint32_t w) {
        try {
            const std::uint64_t b = n * w / workers, e = n * (w + 1) / workers;
            constexpr std::uint64_t chunk = 4096;
            for (std::uint64_t c = b; c < e; c += chunk) {
                const std::size_t count = static_cast<std::size_t>(std::min(chunk, e - c));
                engine.run(kind, w, c, count, batch.samples.data() + c, nullptr, resampled[w]);
            }
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned threads = std::min<unsigned>(workers, hw);
    if (threads <= 1) {
        for (std::uint32_t w = 0; w < workers; ++w) work(w);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (std::uint32_t w = t; w < workers; w += threads) work(w);
            });
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    batch.resampled = std::accumulate(resampled.begin(), resampled.end(), std::uint64_t{0});
    return batch;
}

std::vector<double> SampleBatch::radii() const {
    std::vector<double> out(samples.size());
    std::transform(samples.begin(), samples.end(), out.begin(), [](const Sample& s) { return s.exit_radius; });
    return out;
}

std::vector<double> SampleBatch::times() const {
    std::vector<double> out(samples.size());
    std::transform(samples.begin(), samples.end(), out.begin(), [](const Sample& s) { return s.exit_time; });
    return out;
}

std::string SampleBatch::header_json() const {
    nlohmann::ordered_json j;
    j["kind"] = to_string(kind);
    j["cone"] = cone;
    j["start"] = {{"rho", start.rho}, {"theta", start.theta}};
    j["h"] = params.h;
    j["h_clock"] = params.clock_step();
    j["kappa"] = params.kappa;
    j["budget"] = params.budget;
    j["rng"] = kRngAlgorithm;
    j["seed"] = params.seed;
    j["workers"] = params.workers;
    j["N"] = samples.size();
    j["resampled"] = resampled;
    return j.dump();
}

void SampleBatch::write_csv(std::ostream& out) const {
    out << "# " << header_json() << '\n' << kColumns << '\n';
    std::string line;
    for (const Sample& s : samples) {
        line.clear();
        line += format_number(s.exit_time);
        line += ',';
        line += format_number(s.exit_radius);
        line += ',';
        line += format_number(s.boundary_coord);
        line += ',';
        line += std::to_string(s.stream);
        line += ',';
        line += std::to_string(s.path_index);
        line += '\n';
        out << line;
    }
}

SampleBatch SampleBatch::read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
        throw std::invalid_argument("sample file must start with a '# {json}' header line");
    SampleBatch b;
    try {
        const auto j = nlohmann::json::parse(line.substr(2));
        b.kind = parse_sample_kind(j.at("kind").get<std::string>());
        b.cone = j.at("cone").get<std::string>();
        b.start = {j.at("start").at("rho").get<double>(), j.at("start").at("theta").get<double>()};
        b.params.h = j.at("h").get<double>();
        b.params.h_clock = j.at("h_clock").get<double>();
        b.params.kappa = j.at("kappa").get<double>();
        b.params.budget = j.at("budget").get<std::uint64_t>();
        b.params.seed = j.at("seed").get<std::uint64_t>();
        b.params.workers = j.at("workers").get<std::uint32_t>();
        b.resampled = j.at("resampled").get<std::uint64_t>();
        if (j.at("rng").get<std::string>() != kRngAlgorithm) throw std::invalid_argument("unknown generator");
        b.samples.reserve(j.at("N").get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("bad sample file header: ") + e.what());
    }
    if (!std::getline(in, line) || line != kColumns)
        throw std::invalid_argument("sample file column row must be '" + std::string(kColumns) + "'");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::string_view rest(line);
        std::string_view f[5];
        for (int k = 0; k < 5; ++k) {
            const auto comma = rest.find(',');
            if ((comma == std::string_view::npos) != (k == 4))
                throw std::invalid_argument("sample row needs 5 fields: '" + line + "'");
            f[k] = rest.substr(0, comma);
            if (k < 4) rest.remove_prefix(comma + 1);
        }
        b.samples.push_back(Sample{parse_number(f[0]), parse_number(f[1]), parse_number(f[2]),
                                   static_cast<std::uint32_t>(parse_uint(f[3])), parse_uint(f[4])});
    }
    return b;
}

namespace {

struct LineFit {
    double slope = 0.0, intercept = 0.0, chi2 = 0.0;
    int points = 0;
};

// Weighted fit of log S against log r; zero-count points are skipped.
LineFit fit_survival(std::span<const double> sorted, const std::vector<double>& grid, std::vector<double>* surv) {
    const double n = static_cast<double>(sorted.size());
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<double> xs, ys, ws;
    for (double r : grid) {
        const auto above = static_cast<double>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), r));
        if (surv) surv->push_back(above / n);
        if (above <= 0.0) continue;
        const double s = above / n;
        const double w = above / std::max(1.0 - s, 1.0 / n);
        const double x = std::log(r), y = std::log(s);
        xs.push_back(x);
        ys.push_back(y);
        ws.push_back(w);
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    LineFit f;
    f.points = static_cast<int>(xs.size());
    if (f.points < 2) return f;
    const double det = sw * sxx - sx * sx;
    f.slope = (sw * sxy - sx * sy) / det;
    f.intercept = (sy - f.slope * sx) / sw;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double res = ys[k] - (f.intercept + f.slope * xs[k]);
        f.chi2 += ws[k] * res * res;
    }
    return f;
}

}  // namespace

TailFit estimate_tail_exponent(std::span<const double> samples, double r_min, double r_max) {
    if (!(r_min > 0.0) || !(r_max >= 4.0 * r_min) || !std::isfinite(r_max))
        throw std::invalid_argument("tail fit needs 0 < 4 r_min <= r_max < inf");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    TailFit out;
    out.tail_count = static_cast<std::size_t>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), r_min));
    if (out.tail_count < 100)
        throw InsufficientData("only " + std::to_string(out.tail_count) + " samples above r_min = " +
                               format_number(r_min) + "; need at least 100");
    for (double r = r_min; r <= r_max * (1.0 + 1e-12); r *= 2.0) out.grid.push_back(r);

    const LineFit all = fit_survival(sorted, out.grid, &out.survival);
    if (all.points < 3) throw InsufficientData("fewer than three dyadic points with data above r_min");
    out.slope = all.slope;
    out.intercept = all.intercept;
    out.fit_quality = all.chi2 / (all.points - 2);

    // batch means: 10 contiguous batches in sample order
    constexpr int kBatches = 10;
    std::vector<double> slopes;
    const std::size_t n = samples.size();
    for (int b = 0; b < kBatches; ++b) {
        const std::size_t lo = n * b / kBatches, hi = n * (b + 1) / kBatches;
        std::vector<double> part(samples.begin() + lo, samples.begin() + hi);
        std::sort(part.begin(), part.end());
        const LineFit f = fit_survival(part, out.grid, nullptr);
        if (f.points >= 2) slopes.push_back(f.slope);
    }
    if (slopes.size() >= 2) {
        const double m = std::accumulate(slopes.begin(), slopes.end(), 0.0) / slopes.size();
        double v = 0.0;
        for (double s : slopes) v += (s - m) * (s - m);
        v /= static_cast<double>(slopes.size() - 1);
        out.std_error = std::sqrt(v / static_cast<double>(slopes.size()));
    } else {
        out.std_error = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw std::invalid_argument("KS distance of an empty sample");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    return d;
}

double ks_distance_window(std::span<const double> samples, const std::function<double(double)>& cdf, double a,
                          double b, std::size_t* count) {
    if (!(a < b)) throw std::invalid_argument("KS window needs a < b");
    std::vector<double> inside;
    for (double x : samples)
        if (x >= a && x <= b) inside.push_back(x);
    if (count) *count = inside.size();
    const double fa = cdf(a), fb = cdf(b);
    if (!(fb > fa)) throw std::invalid_argument("model puts no mass in the KS window");
    return ks_distance(inside, [&](double x) { return (cdf(x) - fa) / (fb - fa); });
}

}  // namespace conexit
