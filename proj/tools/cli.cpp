#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string_view>

#include <CLI11.hpp>
#include <json.hpp>

#include "cubetop/cubical.hpp"
#include "cubetop/detect.hpp"
#include "cubetop/format.hpp"
#include "cubetop/io.hpp"
#include "cubetop/parallel.hpp"
#include "cubetop/stats.hpp"
#include "cubetop/summaries.hpp"
#include "cubetop/synth.hpp"

namespace cubetop::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// --- logging -----------------------------------------------------------------

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

Level log_level() {
  const char* env = std::getenv("CUBETOP_LOG");
  if (env == nullptr) return Level::warn;
  const std::string_view v(env);
  if (v == "error") return Level::error;
  if (v == "info") return Level::info;
  if (v == "debug") return Level::debug;
  return Level::warn;
}

class Logger {
public:
  explicit Logger(std::ostream& err) : err_(err), level_(log_level()) {}

  void operator()(Level level, const std::string& msg) const {
    static constexpr const char* names[] = {"error", "warn", "info", "debug"};
    if (level <= level_) err_ << "[" << names[static_cast<int>(level)] << "] " << msg << '\n';
  }

private:
  std::ostream& err_;
  Level level_;
};

// --- config access with field paths -------------------------------------------

class Node {
public:
  Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return *j_; }

  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key) && !(*j_)[key].is_null(); }

  Node at(const std::string& key) const {
    if (!j_->is_object()) fail("expected an object");
    if (!has(key)) throw ConfigError(child(key) + ": missing required field");
    return Node((*j_)[key], child(key));
  }

  std::vector<Node> items() const {
    if (!j_->is_array()) fail("expected an array");
    std::vector<Node> out;
    for (std::size_t i = 0; i < j_->size(); ++i) out.emplace_back((*j_)[i], path_ + "/" + std::to_string(i));
    return out;
  }

  template <class T>
  T as() const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!j_->is_boolean()) fail("expected a boolean");
      return j_->get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!j_->is_string()) fail("expected a string");
      return j_->get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!j_->is_number()) fail("expected a number");
      return j_->get<T>();
    } else {
      static_assert(std::is_integral_v<T>);
      if (!j_->is_number_integer()) fail("expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (j_->is_number_unsigned()) return j_->get<T>();
        if (j_->get<long long>() < 0) fail("expected a nonnegative integer");
      }
      return j_->get<T>();
    }
  }

  template <class T>
  T get(const std::string& key) const {
    return at(key).as<T>();
  }

  template <class T>
  T get_or(const std::string& key, T fallback) const {
    return has(key) ? at(key).as<T>() : fallback;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError((path_.empty() ? "/" : path_) + ": " + msg); }

  /// Runs `f`, reporting invalid values as errors at this node.
  template <class F>
  auto check(F&& f) const {
    try {
      return f();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    } catch (const std::out_of_range& e) {
      fail(e.what());
    } catch (const json::exception& e) {
      fail(e.what());
    }
  }

private:
  std::string child(const std::string& key) const { return path_ + "/" + key; }

  const json* j_;
  std::string path_;
};

struct Context {
  json doc;
  fs::path base;
  fs::path out_dir;
  std::optional<std::uint64_t> seed_flag;
  unsigned threads = 1;
  std::ostream& out;
  Logger log;

  Node root() const { return Node(doc, ""); }

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
  }

  std::uint64_t seed(const Node& section) const {
    if (seed_flag) return *seed_flag;
    if (section.has("seed")) return section.get<std::uint64_t>("seed");
    return root().get_or<std::uint64_t>("seed", 0);
  }

  void write(const std::string& name, const std::string& contents) const {
    write_file_atomic(out_dir / name, contents);
    log(Level::info, "wrote " + (out_dir / name).string());
  }
};

// --- shared config pieces -------------------------------------------------------

ImageStack stack_from(const Context& ctx, const Node& n) {
  const fs::path path = ctx.resolve(n.get<std::string>("path"));
  StackFormat format = fs::exists(path / "header.json") ? StackFormat::raw_u16 : StackFormat::pgm_dir;
  if (n.has("format")) {
    const Node f = n.at("format");
    format = f.check([&] { return parse_stack_format(f.as<std::string>()); });
  }
  ctx.log(Level::info, "loading stack " + path.string());
  return load_stack(path, format);
}

/// The summed window I_{m, ell}; ell is 1-based as in the window series.
ImageFrame summed_frame(const ImageStack& stack, std::size_t m, std::size_t ell, const Node& where) {
  if (m == 0) where.fail("m must be >= 1");
  if (ell == 0 || ell - 1 + m > stack.frame_count()) {
    where.fail("window I_{" + std::to_string(m) + "," + std::to_string(ell) + "} exceeds the " +
               std::to_string(stack.frame_count()) + " frames of the stack");
  }
  return sum_frames(stack, m, ell - 1);
}

/// Frame input: {"image": PGM} or {"stack": ..., "frame": ell, "m": m}.
ImageFrame frame_from(const Context& ctx, const Node& cfg, std::size_t default_m) {
  if (cfg.has("image")) return read_pgm(ctx.resolve(cfg.get<std::string>("image")));
  const ImageStack stack = stack_from(ctx, cfg.at("stack"));
  return summed_frame(stack, cfg.get_or<std::size_t>("m", default_m), cfg.get_or<std::size_t>("frame", 1), cfg);
}

std::optional<double> eta_from(const Node& cfg, double sigma) {
  if (!cfg.has("eta")) return std::nullopt;
  const Node n = cfg.at("eta");
  if (n.raw().is_string()) {
    if (n.as<std::string>() != "auto") n.fail("expected a number, \"auto\" or null");
    auto eta = default_eta_for_sigma(sigma);
    if (!eta) n.fail("no default eta for sigma " + format_real(sigma) + " (defaults exist for 2, 4 and 6)");
    return eta;
  }
  const double eta = n.as<double>();
  if (!(eta >= 0.0) || !std::isfinite(eta)) n.fail("eta must be finite and >= 0");
  return eta;
}

DetectParams detect_params_from(const Node& cfg, int width, int height) {
  DetectParams p;
  if (cfg.has("region")) {
    const Node r = cfg.at("region");
    p.region = r.check([&] { return region_from_json(r.raw()); });
  } else {
    p.region = RegionSpec::whole_frame(width, height);
  }
  if (p.region.window(width, height).empty()) cfg.at("region").fail("region does not intersect the frame");
  p.sigma = cfg.get_or<double>("sigma", 4.0);
  if (!(p.sigma >= 0.0) || !std::isfinite(p.sigma)) cfg.at("sigma").fail("sigma must be finite and >= 0");
  p.eta = eta_from(cfg, p.sigma);
  if (cfg.has("infinite_mode")) {
    const Node n = cfg.at("infinite_mode");
    p.infinite_mode = n.check([&] { return parse_infinite_mode(n.as<std::string>()); });
  }
  return p;
}

Statistic statistic_from(const Node& n) {
  return n.check([&] { return parse_statistic(n.as<std::string>()); });
}

std::vector<double> read_pool_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pool file " + path.string());
  std::vector<double> pool;
  std::string token;
  while (in >> token) {
    try {
      std::size_t used = 0;
      pool.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw IoError("pool file " + path.string() + " has a non-numeric entry '" + token + "'");
    }
  }
  return pool;
}

/// {"kind": "poisson", "lambda": x | "vacuum": rect, "m": m, "seed": s} or
/// {"kind": "empirical", "pool_file": path | "vacuum": rect, "m": m, "seed": s}.
/// `lambda` is the per-frame rate; the model's mean is m * lambda.
NullModel null_model_from(const Context& ctx, const Node& cfg, const ImageStack* stack, std::size_t command_m) {
  const Node n = cfg.at("null");
  const std::string kind = n.get_or<std::string>("kind", "poisson");
  const std::size_t m = n.get_or<std::size_t>("m", command_m);
  if (m == 0) n.at("m").fail("m must be >= 1");
  const std::uint64_t seed = ctx.seed(n);

  auto vacuum = [&]() {
    const Node v = n.at("vacuum");
    if (stack == nullptr) v.fail("a vacuum window needs a stack input");
    const PixelRect rect = v.check([&] { return rect_from_json(v.raw()); });
    if (rect.empty() || rect.x0 < 0 || rect.y0 < 0 || rect.x1 > stack->width() || rect.y1 > stack->height()) {
      v.fail("vacuum window must be a nonempty rectangle inside the frame");
    }
    return rect;
  };

  if (kind == "poisson") {
    double lambda = 0.0;
    if (n.has("lambda")) {
      lambda = n.get<double>("lambda");
      if (!(lambda >= 0.0) || !std::isfinite(lambda)) n.at("lambda").fail("lambda must be finite and >= 0");
    } else {
      lambda = fit_lambda(*stack, vacuum());
      ctx.log(Level::info, "fitted lambda " + format_real(lambda));
    }
    return NullModel::poisson(static_cast<double>(m) * lambda, seed);
  }
  if (kind == "empirical") {
    std::vector<double> pool;
    if (n.has("pool_file")) {
      pool = read_pool_file(ctx.resolve(n.get<std::string>("pool_file")));
    } else {
      const PixelRect rect = vacuum();
      pool = n.check([&] { return empirical_pool(*stack, rect, m); });
    }
    if (pool.empty()) n.fail("empirical pool is empty");
    return NullModel::empirical(std::move(pool), seed);
  }
  n.at("kind").fail("unknown null model kind '" + kind + "' (expected poisson or empirical)");
}

/// Detection parameters relative to the processing window of a frame.
struct LocalDetect {
  PixelRect window;
  DetectParams params;
};

LocalDetect localize(const DetectParams& p, int width, int height) {
  LocalDetect out;
  out.window = p.region.window(width, height);
  out.params = p;
  out.params.region = p.region.shifted(out.window.x0, out.window.y0);
  out.params.region.rect = PixelRect{0, 0, out.window.width(), out.window.height()};
  return out;
}

std::string csv_value(double v) { return std::isnan(v) ? "" : format_real(v); }

int max_value_of(const ImageFrame& f) {
  return static_cast<int>(std::clamp(std::ceil(f.max_value()), 1.0, 65535.0));
}

// --- subcommands ------------------------------------------------------------

void cmd_detect(const Context& ctx) {
  const Node cfg = ctx.root();
  const ImageFrame frame = frame_from(ctx, cfg, 10);
  const DetectParams params = detect_params_from(cfg, frame.width(), frame.height());
  MarkedPointSet points = detect(frame, params);
  if (!cfg.has("image")) points.frame_index = cfg.get_or<std::size_t>("frame", 1);
  ctx.write("detections.csv", detections_to_csv(points));

  if (cfg.get_or<bool>("overlay", false)) {
    ImageFrame overlay(frame.width(), frame.height());
    const double lo = frame.min_value();
    const double span = std::max(frame.max_value() - lo, 1e-300);
    for (std::size_t i = 0; i < frame.size(); ++i) overlay[i] = std::floor(254.0 * (frame[i] - lo) / span);
    for (const auto& p : points.points) overlay.at(p.location.x, p.location.y) = 255.0;
    write_pgm(ctx.out_dir / "overlay.pgm", overlay, 255);
  }
  ctx.out << points.size() << " points\n";
}

void cmd_summarize(const Context& ctx) {
  const Node cfg = ctx.root();
  const ImageStack stack = stack_from(ctx, cfg.at("stack"));
  const std::size_t m = cfg.get_or<std::size_t>("m", 10);
  const std::size_t step = cfg.get_or<std::size_t>("step", 1);
  if (m == 0) cfg.at("m").fail("m must be >= 1");
  if (step == 0) cfg.at("step").fail("step must be >= 1");
  if (m > stack.frame_count()) cfg.at("m").fail("m exceeds the number of frames");
  const DetectParams params = detect_params_from(cfg, stack.width(), stack.height());

  std::vector<Statistic> stats;
  if (cfg.has("statistics")) {
    for (const Node& s : cfg.at("statistics").items()) stats.push_back(statistic_from(s));
  } else {
    stats = {Statistic::count, Statistic::entropy, Statistic::longest, Statistic::mean, Statistic::alps};
  }
  if (stats.empty()) cfg.at("statistics").fail("at least one statistic is required");

  std::vector<std::size_t> starts; // 1-based ell
  for (std::size_t ell = 1; ell + m - 1 <= stack.frame_count(); ell += step) starts.push_back(ell);

  const LocalDetect local = localize(params, stack.width(), stack.height());
  std::vector<std::uint8_t> mask;
  if (!local.params.region.polygon.empty()) {
    mask = polygon_mask(local.params.region.polygon, local.window.width(), local.window.height());
  }

  std::vector<std::vector<double>> values(starts.size());
  parallel_for(starts.size(), ctx.threads, [&](std::size_t i) {
    const ImageFrame window = smooth(crop(sum_frames(stack, m, starts[i] - 1), local.window), params.sigma);
    const MarkedPointSet points = detect_prepared(window, mask, params.eta, params.infinite_mode);
    for (Statistic s : stats) {
      try {
        values[i].push_back(evaluate_statistic(s, points));
      } catch (const UndefinedStatistic&) {
        values[i].push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
  });

  std::ostringstream csv;
  csv << "frame_index,statistic_name,value\n";
  for (std::size_t i = 0; i < starts.size(); ++i) {
    for (std::size_t s = 0; s < stats.size(); ++s) {
      csv << starts[i] << ',' << to_string(stats[s]) << ',' << csv_value(values[i][s]) << '\n';
    }
  }
  ctx.write("summary.csv", csv.str());
  ctx.out << starts.size() << " windows\n";
}

void cmd_gof(const Context& ctx) {
  const Node cfg = ctx.root();
  std::optional<ImageStack> stack;
  ImageFrame frame;
  const std::size_t m = cfg.get_or<std::size_t>("m", 10);
  if (cfg.has("image")) {
    frame = read_pgm(ctx.resolve(cfg.get<std::string>("image")));
  } else {
    stack = stack_from(ctx, cfg.at("stack"));
    frame = summed_frame(*stack, m, cfg.get_or<std::size_t>("frame", 1), cfg);
  }

  GofOptions opt;
  opt.detect = detect_params_from(cfg, frame.width(), frame.height());
  opt.statistic = cfg.has("statistic") ? statistic_from(cfg.at("statistic")) : Statistic::count;
  opt.replicates = cfg.get_or<std::size_t>("n", 9999);
  if (opt.replicates == 0) cfg.at("n").fail("n must be >= 1");
  opt.alpha = cfg.get_or<double>("alpha", 0.05);
  if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) cfg.at("alpha").fail("alpha must be in (0, 1)");
  opt.threads = ctx.threads;
  const NullModel model = null_model_from(ctx, cfg, stack ? &*stack : nullptr, m);

  const TestReport report = gof_test(frame, opt, model);
  ctx.write("report.json", report.to_json().dump(2) + "\n");
  ctx.out << "p = " << format_real(report.p_value) << '\n';
}

void cmd_multitest(const Context& ctx) {
  const Node cfg = ctx.root();
  const ImageStack stack = stack_from(ctx, cfg.at("stack"));
  const std::size_t m = cfg.get_or<std::size_t>("m", 5);
  if (m == 0) cfg.at("m").fail("m must be >= 1");
  std::size_t windows = stack.frame_count() / m;
  if (cfg.has("windows")) windows = std::min(windows, cfg.get<std::size_t>("windows"));
  if (windows == 0) cfg.fail("the stack has no complete window of m frames");

  GofOptions opt;
  opt.detect = detect_params_from(cfg, stack.width(), stack.height());
  opt.statistic = cfg.has("statistic") ? statistic_from(cfg.at("statistic")) : Statistic::count;
  opt.replicates = cfg.get_or<std::size_t>("n", 9999);
  if (opt.replicates == 0) cfg.at("n").fail("n must be >= 1");
  opt.alpha = cfg.get_or<double>("alpha", 0.05);
  if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) cfg.at("alpha").fail("alpha must be in (0, 1)");
  opt.threads = ctx.threads;
  const NullModel model = null_model_from(ctx, cfg, &stack, m);

  const LocalDetect local = localize(opt.detect, stack.width(), stack.height());
  GofOptions local_opt = opt;
  local_opt.detect = local.params;

  // Windows I_{m, mk+1}, k = 0..windows-1.
  std::vector<std::size_t> labels(windows);
  std::vector<double> observed(windows);
  parallel_for(windows, ctx.threads, [&](std::size_t k) {
    labels[k] = m * k + 1;
    const ImageFrame window = crop(sum_frames(stack, m, m * k), local.window);
    observed[k] = statistic_or_lowest(opt.statistic, detect(window, local.params));
  });
  const std::vector<double> pool =
      simulate_null_statistics(local.window.width(), local.window.height(), local_opt, model);

  const MultiTestReport report = multi_test(observed, pool, opt.alpha, labels);
  ctx.write("multitest.csv", report.to_csv());
  ctx.out << report.rejections << " of " << report.hypotheses << " rejected\n";
}

GroundTruthSpec truth_from(const Node& n) {
  if (n.has("lattice")) {
    const Node l = n.at("lattice");
    std::vector<double> amplitudes;
    for (const Node& a : l.at("amplitudes").items()) amplitudes.push_back(a.as<double>());
    return l.check([&] {
      return GroundTruthSpec::lattice(l.get<int>("rows"), l.get<int>("cols"), l.get<double>("spacing"),
                                      l.get<double>("margin"), amplitudes, l.get<double>("peak_width"),
                                      l.get<double>("background"), l.get<double>("dose"));
    });
  }
  return n.check([&] { return ground_truth_from_json(n.raw()); });
}

void cmd_simulate(const Context& ctx) {
  const Node cfg = ctx.root();
  const GroundTruthSpec spec = truth_from(cfg.at("truth"));
  const std::size_t seeds = cfg.get_or<std::size_t>("seeds", 10);
  const std::uint64_t seed = ctx.seed(cfg);
  std::vector<double> sigmas;
  if (cfg.has("sigmas")) {
    for (const Node& s : cfg.at("sigmas").items()) sigmas.push_back(s.as<double>());
  } else {
    sigmas = {2.0, 4.0, 6.0};
  }
  const bool write_frames = cfg.get_or<bool>("write_frames", true);

  const ImageFrame truth = render_truth(spec);
  ImageFrame expected = truth;
  for (std::size_t i = 0; i < expected.size(); ++i) expected[i] *= spec.dose;
  std::vector<Point2> centers;
  for (const auto& p : spec.peaks) centers.push_back(p.center);

  std::vector<ImageFrame> noisy(seeds);
  parallel_for(seeds, ctx.threads, [&](std::size_t j) { noisy[j] = add_shot_noise(truth, spec.dose, seed, j); });
  if (write_frames) {
    for (std::size_t j = 0; j < seeds; ++j) {
      char name[32];
      std::snprintf(name, sizeof name, "noisy_%03zu.pgm", j);
      write_pgm(ctx.out_dir / name, noisy[j], std::max(255, max_value_of(noisy[j])));
    }
  }

  std::ostringstream csv;
  csv << "seed,sigma,count,hausdorff,correlation\n";
  for (double sigma : sigmas) {
    DetectParams p;
    p.region = RegionSpec::whole_frame(spec.width, spec.height);
    p.sigma = sigma;
    p.eta = eta_from(cfg, sigma);
    const MarkedPointSet reference = detect(expected, p);
    std::vector<std::string> rows(seeds);
    parallel_for(seeds, ctx.threads, [&](std::size_t j) {
      const MarkedPointSet found = detect(noisy[j], p);
      double dh = std::numeric_limits<double>::quiet_NaN();
      double rho = std::numeric_limits<double>::quiet_NaN();
      if (!found.empty() && !centers.empty()) dh = hausdorff(centers, locations(found));
      if (found.size() == reference.size() && found.size() >= 2) {
        try {
          rho = matched_intensity_correlation(reference, found);
        } catch (const UndefinedStatistic&) {
        }
      }
      rows[j] = std::to_string(j) + "," + format_real(sigma) + "," + std::to_string(found.size()) + "," +
                csv_value(dh) + "," + csv_value(rho) + "\n";
    });
    for (const auto& r : rows) csv << r;
  }
  ctx.write("truth.json", ground_truth_to_json(spec).dump(2) + "\n");
  ctx.write("recovery.csv", csv.str());
  ctx.out << seeds << " seeds x " << sigmas.size() << " sigmas\n";
}

void cmd_diagnose(const Context& ctx) {
  const Node cfg = ctx.root();
  const ImageStack stack = stack_from(ctx, cfg.at("stack"));
  const Node vn = cfg.at("vacuum");
  const PixelRect vacuum = vn.check([&] { return rect_from_json(vn.raw()); });
  if (vacuum.empty() || vacuum.x0 < 0 || vacuum.y0 < 0 || vacuum.x1 > stack.width() || vacuum.y1 > stack.height()) {
    vn.fail("vacuum window must be a nonempty rectangle inside the frame");
  }

  const double lambda = fit_lambda(stack, vacuum);
  const std::vector<std::uint64_t> hist = vacuum_histogram(stack, vacuum);
  const double ks = poisson_ks_distance_histogram(hist, lambda);

  const double pooled = static_cast<double>(vacuum.area()) * static_cast<double>(stack.frame_count());
  double sample_size = pooled;
  if (cfg.has("dkw_sample_size")) {
    const Node n = cfg.at("dkw_sample_size");
    if (n.raw().is_string()) {
      const std::string s = n.as<std::string>();
      if (s == "per_frame") {
        sample_size = static_cast<double>(vacuum.area());
      } else if (s != "pooled") {
        n.fail("expected \"pooled\", \"per_frame\" or a number");
      }
    } else {
      sample_size = n.as<double>();
      if (!(sample_size > 0.0)) n.fail("sample size must be > 0");
    }
  }

  json report;
  report["lambda"] = lambda;
  report["ks_distance"] = ks;
  report["dkw_sample_size"] = sample_size;
  report["dkw_p_value"] = dkw_pvalue(ks, sample_size);

  if (stack.frame_count() >= 2) {
    const std::size_t max_lag = std::min(cfg.get_or<std::size_t>("max_lag", 50), stack.frame_count() - 1);
    const AutocorrelationResult ac = mean_autocorrelation(stack, vacuum, max_lag);
    std::ostringstream csv;
    csv << "lag,mean_rho,z\n";
    for (std::size_t h = 0; h < ac.mean_rho.size(); ++h) {
      csv << h + 1 << ',' << csv_value(ac.mean_rho[h]) << ',' << csv_value(ac.mean_rho[h] / ac.null_sd) << '\n';
    }
    ctx.write("autocorrelation.csv", csv.str());
    report["autocorrelation"] = {{"null_sd", ac.null_sd},
                                 {"pixels_used", ac.pixels_used},
                                 {"pixels_excluded", ac.pixels_excluded}};
  }

  const std::size_t m = cfg.get_or<std::size_t>("m", std::min<std::size_t>(10, stack.frame_count()));
  const std::size_t ell = cfg.get_or<std::size_t>("frame", 1);
  const ImageFrame summed = summed_frame(stack, m, ell, cfg);
  const std::vector<SemivariogramBin> gamma = semivariogram(summed, vacuum, cfg.get_or<std::size_t>("bins", 10));
  std::ostringstream csv;
  csv << "lag,pairs,value\n";
  for (const auto& b : gamma) csv << b.lag << ',' << b.pairs << ',' << (b.value ? format_real(*b.value) : "") << '\n';
  ctx.write("semivariogram.csv", csv.str());

  double mean = 0.0, sq = 0.0;
  for (int y = vacuum.y0; y < vacuum.y1; ++y) {
    for (int x = vacuum.x0; x < vacuum.x1; ++x) mean += summed.at(x, y);
  }
  mean /= static_cast<double>(vacuum.area());
  for (int y = vacuum.y0; y < vacuum.y1; ++y) {
    for (int x = vacuum.x0; x < vacuum.x1; ++x) sq += (summed.at(x, y) - mean) * (summed.at(x, y) - mean);
  }
  report["semivariogram"] = {{"m", m}, {"frame", ell}, {"window_variance", sq / static_cast<double>(vacuum.area())}};

  ctx.write("diagnose.json", report.dump(2) + "\n");
  ctx.out << "lambda = " << format_real(lambda) << ", ks = " << format_real(ks) << '\n';
}

void cmd_threshold(const Context& ctx) {
  const Node cfg = ctx.root();
  ImageFrame frame = frame_from(ctx, cfg, 10);
  const double sigma = cfg.get_or<double>("sigma", 0.0);
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) cfg.at("sigma").fail("sigma must be finite and >= 0");
  frame = smooth(frame, sigma);
  const ThresholdResult r = pd_threshold(frame);
  write_pgm(ctx.out_dir / "binary.pgm", r.binary, 1);
  const json report = {{"threshold", r.threshold}, {"objective", r.objective}, {"sigma", sigma}};
  ctx.write("threshold.json", report.dump(2) + "\n");
  ctx.out << "t* = " << format_real(r.threshold) << '\n';
}

json read_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  try {
    json doc = json::parse(in);
    if (!doc.is_object()) throw ConfigError("/: config must be a JSON object");
    return doc;
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topological detection and Monte Carlo testing for noisy image stacks", "cubetop"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  unsigned threads = default_threads();
  app.add_option("--config", config, "JSON config file")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "RNG seed; overrides the config");
  app.add_option("--threads", threads, "Worker threads")->check(CLI::Range(1u, 4096u));
  app.add_option("--out", out_dir, "Output directory");

  using Handler = void (*)(const Context&);
  const std::vector<std::tuple<std::string, std::string, Handler>> commands = {
      {"detect", "Detect columns on one frame", cmd_detect},
      {"summarize", "Summary statistics over the window series", cmd_summarize},
      {"gof", "Monte Carlo goodness-of-fit test of one frame", cmd_gof},
      {"multitest", "Multiple Monte Carlo tests over the window series", cmd_multitest},
      {"simulate", "Synthetic frames and recovery metrics", cmd_simulate},
      {"diagnose", "Poisson null diagnostics of a vacuum window", cmd_diagnose},
      {"threshold", "Persistence-based binarization", cmd_threshold},
  };
  for (const auto& [name, help, fn] : commands) app.add_subcommand(name, help)->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  Logger log(err);
  try {
    Context ctx{read_config(config), fs::absolute(config).parent_path(), fs::path(out_dir), seed, threads, out, log};
    fs::create_directories(ctx.out_dir);
    for (const auto& [name, help, fn] : commands) {
      if (app.got_subcommand(name)) {
        log(Level::info, "running " + name);
        fn(ctx);
      }
    }
    return 0;
  } catch (const ConfigError& e) {
    log(Level::error, std::string("config: ") + e.what());
    return 2;
  } catch (const std::exception& e) {
    log(Level::error, e.what());
    return 1;
  }
}

} // namespace cubetop::cli
