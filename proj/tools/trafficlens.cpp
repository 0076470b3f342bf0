// trafficlens: command-line front end. See README.md for the command surface.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "trafficlens/datasynth/accidents.hpp"
#include "trafficlens/datasynth/images.hpp"
#include "trafficlens/datasynth/text.hpp"
#include "trafficlens/datasynth/traffic.hpp"
#include "trafficlens/io/artifact.hpp"
#include "trafficlens/metrics/bench.hpp"
#include "trafficlens/metrics/report.hpp"
#include "trafficlens/tabular/balance.hpp"
#include "trafficlens/tabular/forest.hpp"
#include "trafficlens/tabular/gbdt.hpp"
#include "trafficlens/tabular/importance.hpp"
#include "trafficlens/tabular/logistic.hpp"
#include "trafficlens/tabular/severity.hpp"
#include "trafficlens/tabular/tuning.hpp"
#include "trafficlens/timeseries/arima.hpp"
#include "trafficlens/timeseries/decompose.hpp"
#include "trafficlens/vision/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace trafficlens;

namespace {

constexpr const char* kToolVersion = "1.0.0";
constexpr std::uint64_t kDefaultSeed = 42;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Flag wins over TRAFFICLENS_SEED, which wins over the default.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("TRAFFICLENS_SEED"); env && *env) {
    std::uint64_t v = 0;
    const std::string_view s(env);
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    require(ec == std::errc() && end == s.data() + s.size(), ErrorKind::kConfig,
            "TRAFFICLENS_SEED must be a non-negative integer, got '" + std::string(s) + "'");
    return v;
  }
  return kDefaultSeed;
}

std::string resolve_path(const std::string& p) {
  if (p.empty()) return p;
  return fs::weakly_canonical(fs::absolute(p)).string();
}

void write_text(const std::string& path, const std::string& text) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::kParse, "cannot write " + path);
  out << text;
  out.flush();
  require(static_cast<bool>(out), ErrorKind::kParse, "failed writing " + path);
}

// Report envelope shared by every subcommand. Keys are sorted; everything
// that depends on the clock lives under "timing".
struct Run {
  std::string command;
  std::uint64_t seed = kDefaultSeed;
  json config = json::object();
  json result = json::object();
  json timing = json::object();
  Clock::time_point started = Clock::now();

  void write(const std::string& path) {
    if (path.empty()) return;
    timing["wall_seconds"] = seconds_since(started);
    json j;
    j["command"] = command;
    j["seed"] = seed;
    j["config"] = config;
    j["artifact_version"] = io::kFormatVersion;
    j["tool_version"] = kToolVersion;
    j["result"] = result;
    j["timing"] = timing;
    write_text(path, j.dump(2) + "\n");
  }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(item);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  const auto v = csv::to_number(s);
  require(v.has_value(), ErrorKind::kConfig, what + ": '" + s + "' is not a number");
  return *v;
}

std::size_t parse_size(const std::string& s, const std::string& what) {
  const double v = parse_double(s, what);
  require(v >= 0 && v == std::floor(v), ErrorKind::kConfig, what + ": '" + s + "' is not a non-negative integer");
  return static_cast<std::size_t>(v);
}

timeseries::ArimaOrder parse_order(const std::string& s) {
  const auto parts = split_list(s);
  require(parts.size() == 3, ErrorKind::kConfig, "--order expects p,d,q, got '" + s + "'");
  return {static_cast<int>(parse_size(parts[0], "--order")), static_cast<int>(parse_size(parts[1], "--order")),
          static_cast<int>(parse_size(parts[2], "--order"))};
}

std::vector<std::string> severity_labels() {
  return {std::string(kSeverityNames[0]), std::string(kSeverityNames[1]), std::string(kSeverityNames[2])};
}

std::vector<std::string> image_labels() {
  std::vector<std::string> out;
  for (auto n : kImageClassNames) out.emplace_back(n);
  return out;
}

std::string fmt(double v) { return csv::format_number(v); }

template <class T>
const T& expect_kind(const io::AnyModel& m, const std::string& path, const std::string& want) {
  const auto* p = std::get_if<T>(&m);
  require(p != nullptr, ErrorKind::kSchema, path + ": expected a " + want + " model, found " + io::kind_of(m));
  return *p;
}

Matrix cnn_proba(const vision::CnnModel& m, std::span<const ImageSample> images, std::size_t chunk = 128) {
  Matrix out(images.size(), m.num_classes);
  for (std::size_t s = 0; s < images.size(); s += chunk) {
    const auto part = images.subspan(s, std::min(chunk, images.size() - s));
    const auto p = vision::predict_proba(m, part);
    for (std::size_t r = 0; r < p.rows(); ++r) {
      for (std::size_t c = 0; c < p.cols(); ++c) out(s + r, c) = p(r, c);
    }
  }
  return out;
}

// Probabilities of a classification model on PATH, plus the true labels.
struct Scored {
  Matrix proba;
  std::vector<int> labels;
  std::vector<std::string> names;
  std::string model;
};

Scored score_data(const io::AnyModel& m, const std::string& data) {
  if (const auto* s = std::get_if<tabular::SeverityModel>(&m)) {
    const auto records = datasynth::load_accidents_csv(data);
    require(!records.empty(), ErrorKind::kLength, data + ": no records to evaluate");
    return {tabular::predict_proba(*s, records), labels_of(records), severity_labels(),
            std::string(tabular::kind_name(s->model))};
  }
  if (const auto* c = std::get_if<vision::CnnModel>(&m)) {
    const auto images = datasynth::load_image_dir(data, c->input_height);
    require(!images.empty(), ErrorKind::kLength, data + ": no images to evaluate");
    return {cnn_proba(*c, images), vision::labels_of(images), image_labels(), "cnn"};
  }
  fail(ErrorKind::kSchema, "model kind " + io::kind_of(m) + " is not a classifier");
}

json report_body(metrics::EvalReport rep, json& timing) {
  auto j = metrics::to_json(rep);
  for (auto& [k, v] : j["timing"].items()) timing[k] = v;
  j.erase("timing");
  return j;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthOpts {
  std::string what, out, report;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;
  datasynth::TrafficGenSpec traffic;
  bool checkerboard = false;
  std::size_t image_size = 32;
  double noise = 0.25;
};

int cmd_synth(const SynthOpts& o) {
  Run run{"synth " + o.what};
  run.seed = resolve_seed(o.seed);
  const auto out = resolve_path(o.out);
  run.config = {{"kind", o.what}, {"out", out}};
  fs::create_directories(out);
  if (o.what == "traffic") {
    auto spec = o.traffic;
    spec.seed = run.seed;
    if (o.n) spec.n = *o.n;
    run.config.update({{"n", spec.n}, {"base", spec.base}, {"slope", spec.slope},
                       {"daily_amplitude", spec.daily_amplitude}, {"weekly_amplitude", spec.weekly_amplitude},
                       {"sigma", spec.sigma}});
    const auto series = datasynth::gen_traffic(spec);
    const auto path = (fs::path(out) / "traffic.csv").string();
    datasynth::write_traffic_csv(series, path);
    run.result = {{"file", path}, {"rows", series.size()}};
  } else if (o.what == "accidents") {
    datasynth::AccidentGenSpec spec;
    spec.seed = run.seed;
    spec.checkerboard = o.checkerboard;
    if (o.n) spec.n = *o.n;
    run.config.update({{"n", spec.n}, {"checkerboard", spec.checkerboard}, {"priors", spec.priors}});
    const auto recs = datasynth::gen_accidents(spec);
    const auto path = (fs::path(out) / "accidents.csv").string();
    datasynth::write_accidents_csv(recs, path);
    std::vector<std::size_t> counts(kNumSeverity, 0);
    for (const auto& r : recs) ++counts[static_cast<std::size_t>(r.severity)];
    run.result = {{"file", path}, {"rows", recs.size()}, {"class_counts", counts}};
  } else if (o.what == "images") {
    datasynth::ImageGenSpec spec;
    spec.seed = run.seed;
    spec.size = o.image_size;
    spec.noise_sigma = o.noise;
    if (o.n) spec.n = *o.n;
    run.config.update({{"n", spec.n}, {"size", spec.size}, {"noise_sigma", spec.noise_sigma}});
    const auto images = datasynth::gen_images(spec);
    datasynth::write_image_dir(images, out);
    run.result = {{"directory", out}, {"images", images.size()}};
  } else {
    const std::size_t n = o.n.value_or(500);
    run.config["n"] = n;
    const auto texts = datasynth::gen_narratives(n, run.seed);
    std::string text;
    for (const auto& t : texts) text += t + "\n";
    const auto path = (fs::path(out) / "narratives.txt").string();
    write_text(path, text);
    run.result = {{"file", path}, {"rows", texts.size()}};
  }
  run.write(o.report);
  return 0;
}

// ---------------------------------------------------------------------------
// time series
// ---------------------------------------------------------------------------

struct FitArimaOpts {
  std::string series, order = "2,0,1", out, report;
  std::size_t holdout = 24;
  std::size_t seasonal_period = 24;
  int max_iterations = 500;
};

int cmd_fit_arima(const FitArimaOpts& o) {
  Run run{"fit-arima"};
  const auto order = parse_order(o.order);
  timeseries::validate(order);
  run.seed = resolve_seed(std::nullopt);
  run.config = {{"series", resolve_path(o.series)}, {"order", {order.p, order.d, order.q}},
                {"out", resolve_path(o.out)}, {"holdout", o.holdout}, {"seasonal_period", o.seasonal_period},
                {"max_iterations", o.max_iterations}};
  const auto series = datasynth::load_traffic_csv(o.series);
  require(o.holdout < series.size(), ErrorKind::kLength, "holdout leaves no observations to fit");
  const auto values = series.values();
  const auto train = values.first(values.size() - o.holdout);
  timeseries::ArimaConfig cfg;
  cfg.seasonal_period = o.seasonal_period;
  cfg.optimizer.max_iter = o.max_iterations;
  const auto t0 = Clock::now();
  const auto model = timeseries::fit_arima(train, order, cfg);
  run.timing["fit_seconds"] = seconds_since(t0);
  io::save_model(model, o.out);

  double abs_sum = 0.0, sq_sum = 0.0;
  for (double r : model.residuals) {
    abs_sum += std::abs(r);
    sq_sum += r * r;
  }
  const double n = static_cast<double>(model.residuals.size());
  run.result = {{"phi", model.phi},
                {"theta", model.theta},
                {"mean", model.mean},
                {"sigma2", model.sigma2},
                {"css", model.css},
                {"iterations", model.iterations},
                {"converged", model.converged},
                {"n_obs", model.n_obs},
                {"residuals", {{"count", model.residuals.size()}, {"mae", abs_sum / n}, {"rmse", std::sqrt(sq_sum / n)}}}};
  if (o.holdout > 0) {
    const auto fc = timeseries::forecast(model, o.holdout);
    const auto actual = values.last(o.holdout);
    run.result["holdout"] = {{"hours", o.holdout}, {"mae", timeseries::mae(actual, fc.point)}};
  }
  run.write(o.report);
  std::cout << "phi=" << json(model.phi).dump() << " theta=" << json(model.theta).dump()
            << " sigma2=" << fmt(model.sigma2) << " residual_mae=" << fmt(abs_sum / n) << "\n";
  return 0;
}

int cmd_forecast(const std::string& model_path, std::size_t horizon, const std::string& out) {
  require(horizon >= 1, ErrorKind::kConfig, "--horizon must be at least 1");
  const auto any = io::load_model(model_path);
  const auto& m = expect_kind<timeseries::ArimaModel>(any, model_path, "arima");
  const auto fc = timeseries::forecast(m, horizon);
  std::ostringstream os;
  csv::Writer w(os);
  w.row({"step", "forecast", "std_error", "lower_95", "upper_95"});
  for (std::size_t h = 0; h < horizon; ++h) {
    const double p = fc.point[h], se = fc.std_error[h];
    w.row({std::to_string(h + 1), fmt(p), fmt(se), fmt(p - 1.96 * se), fmt(p + 1.96 * se)});
  }
  write_text(out, os.str());
  return 0;
}

int cmd_decompose(const std::string& series_path, std::size_t period, const std::string& out) {
  const auto series = datasynth::load_traffic_csv(series_path);
  const auto d = timeseries::decompose(series, period);
  auto cell = [](double v) { return std::isnan(v) ? std::string() : fmt(v); };
  std::ostringstream os;
  csv::Writer w(os);
  w.row({"timestamp_hour", "observed", "trend", "seasonal", "residual"});
  const auto values = series.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    w.row({std::to_string(series.start_hour() + static_cast<std::int64_t>(i)), fmt(values[i]), cell(d.trend[i]),
           cell(d.seasonal[i]), cell(d.residual[i])});
  }
  write_text(out, os.str());
  return 0;
}

// ---------------------------------------------------------------------------
// severity classification
// ---------------------------------------------------------------------------

struct ModelFlags {
  std::string type = "gbdt";
  tabular::GbdtParams gbdt;
  tabular::ForestParams forest;
  tabular::LogisticParams logistic;

  json to_json() const {
    if (type == "gbdt") {
      return {{"rounds", gbdt.rounds}, {"eta", gbdt.eta}, {"max_depth", gbdt.max_depth}, {"lambda", gbdt.lambda},
              {"gamma", gbdt.gamma}, {"min_child_samples", gbdt.min_child_samples}};
    }
    if (type == "rf") {
      return {{"n_trees", forest.n_trees}, {"max_depth", forest.max_depth},
              {"min_child_samples", forest.min_child_samples}, {"bootstrap", forest.bootstrap},
              {"max_features", forest.max_features}};
    }
    return {{"steps", logistic.steps}, {"step_size", logistic.step_size}, {"l2", logistic.l2}};
  }

  tabular::Classifier fit(const Matrix& X, std::span<const int> y, std::uint64_t seed,
                          const tabular::ParamSet& overrides = {}) const {
    if (type == "gbdt") return tabular::fit_gbdt(X, y, tabular::gbdt_params_from(overrides, gbdt));
    if (type == "rf") {
      auto p = tabular::forest_params_from(overrides, forest);
      p.seed = seed;
      return tabular::fit_random_forest(X, y, p);
    }
    return tabular::fit_logistic(X, y, tabular::logistic_params_from(overrides, logistic));
  }
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
  cmd->add_option("--model", f.type, "gbdt, rf or logistic")->check(CLI::IsMember({"gbdt", "rf", "logistic"}));
  cmd->add_option("--rounds", f.gbdt.rounds, "gbdt boosting rounds");
  cmd->add_option("--eta", f.gbdt.eta, "gbdt learning rate");
  cmd->add_option("--max-depth", f.gbdt.max_depth, "gbdt tree depth");
  cmd->add_option("--lambda", f.gbdt.lambda, "gbdt L2 leaf penalty");
  cmd->add_option("--n-trees", f.forest.n_trees, "rf tree count");
  cmd->add_option("--rf-max-depth", f.forest.max_depth, "rf tree depth");
  cmd->add_option("--steps", f.logistic.steps, "logistic gradient steps");
  cmd->add_option("--l2", f.logistic.l2, "logistic L2 penalty");
}

struct TrainSeverityOpts {
  std::string data, balance = "none", out, report;
  double split = 0.7;
  std::optional<std::uint64_t> seed;
  ModelFlags model;
};

int cmd_train_severity(const TrainSeverityOpts& o) {
  Run run{"train-severity"};
  run.seed = resolve_seed(o.seed);
  require(o.split > 0.0 && o.split < 1.0, ErrorKind::kConfig, "--split must lie in (0,1)");
  run.config = {{"data", resolve_path(o.data)}, {"model", o.model.type}, {"balance", o.balance},
                {"split", o.split}, {"stratified", true}, {"out", resolve_path(o.out)},
                {"params", o.model.to_json()}};

  auto records = datasynth::load_accidents_csv(o.data);
  require(records.size() >= 2, ErrorKind::kLength, o.data + ": need at least 2 records");
  const std::size_t loaded = records.size();
  if (o.balance == "down") {
    const auto y = labels_of(records);
    const auto idx = tabular::balance_indices(y, kNumSeverity, tabular::BalanceStrategy::kDownsample, run.seed);
    std::vector<AccidentRecord> kept;
    kept.reserve(idx.size());
    for (auto i : idx) kept.push_back(std::move(records[i]));
    records = std::move(kept);
  }
  const auto y_all = labels_of(records);
  const auto parts = split(y_all, {o.split, run.seed, true});
  std::vector<AccidentRecord> train, test;
  for (auto i : parts.train) train.push_back(records[i]);
  for (auto i : parts.test) test.push_back(records[i]);
  require(!test.empty(), ErrorKind::kLength, "test partition is empty");

  const auto t0 = Clock::now();
  auto encoder = FeatureEncoder::fit(train);
  Matrix X = encoder.transform(train).values;
  auto y = labels_of(train);
  if (o.balance == "over") {
    auto [Xb, yb] = tabular::balance_classes(X, y, kNumSeverity, tabular::BalanceStrategy::kOversample, run.seed);
    X = std::move(Xb);
    y = std::move(yb);
  }
  tabular::SeverityModel model{encoder, o.model.fit(X, y, run.seed)};
  const double train_seconds = seconds_since(t0);
  io::save_model(model, o.out);

  const auto t1 = Clock::now();
  auto rep = metrics::evaluate(labels_of(test), tabular::predict_proba(model, test), severity_labels(),
                               o.model.type);
  rep.inference_ms = seconds_since(t1) * 1000.0 / static_cast<double>(test.size());
  rep.train_seconds = train_seconds;
  run.result = report_body(rep, run.timing);
  run.result["rows"] = {{"loaded", loaded}, {"after_balance", records.size()}, {"train", y.size()},
                        {"test", test.size()}};
  run.write(o.report);
  std::cout << o.model.type << " accuracy=" << fmt(rep.scores.accuracy) << " macro_f1=" << fmt(rep.scores.macro_f1)
            << "\n";
  return 0;
}

int cmd_importance(const std::string& model_path, const std::string& out) {
  const auto any = io::load_model(model_path);
  const auto& m = expect_kind<tabular::SeverityModel>(any, model_path, "severity");
  const auto columns = m.encoder.columns();
  tabular::ImportanceReport rep;
  if (const auto* g = std::get_if<tabular::GbdtModel>(&m.model)) {
    rep = tabular::feature_importance(*g, columns);
  } else if (const auto* f = std::get_if<tabular::RfModel>(&m.model)) {
    rep = tabular::feature_importance(*f, columns);
  } else {
    fail(ErrorKind::kConfig, "importance needs a gbdt or rf model, found logistic");
  }
  std::ostringstream os;
  csv::Writer w(os);
  w.row({"feature", "gain"});
  for (const auto& e : rep) w.row({e.feature, fmt(e.gain)});
  write_text(out, os.str());
  return 0;
}

// ---------------------------------------------------------------------------
// images
// ---------------------------------------------------------------------------

struct TrainImageOpts {
  std::string dir, out, report;
  std::optional<std::uint64_t> seed;
  vision::TrainConfig train;
  double split = 0.8;
  std::size_t subsample = 0;
};

int cmd_train_image(TrainImageOpts o) {
  Run run{"train-image"};
  run.seed = resolve_seed(o.seed);
  o.train.seed = run.seed;
  vision::validate(o.train);
  require(o.split > 0.0 && o.split < 1.0, ErrorKind::kConfig, "--split must lie in (0,1)");
  run.config = {{"dir", resolve_path(o.dir)}, {"out", resolve_path(o.out)}, {"epochs", o.train.epochs},
                {"batch_size", o.train.batch_size}, {"learning_rate", o.train.learning_rate},
                {"momentum", o.train.momentum}, {"augment", o.train.augment}, {"split", o.split},
                {"subsample", o.subsample}, {"architecture", "conv3x3x8-relu-pool-conv3x3x16-relu-pool-dense"}};

  auto images = datasynth::load_image_dir(o.dir);
  require(images.size() >= 2, ErrorKind::kLength, o.dir + ": need at least 2 images");
  if (o.subsample > 0 && o.subsample < images.size()) {
    const auto y = vision::labels_of(images);
    const auto pick = split(y, {static_cast<double>(o.subsample) / static_cast<double>(images.size()),
                                run.seed ^ 0x5bd1e995ULL, true});
    std::vector<ImageSample> kept;
    for (auto i : pick.train) kept.push_back(std::move(images[i]));
    images = std::move(kept);
  }
  const auto parts = split(vision::labels_of(images), {o.split, run.seed, true});
  std::vector<ImageSample> train, test;
  for (auto i : parts.train) train.push_back(images[i]);
  for (auto i : parts.test) test.push_back(images[i]);

  auto model = vision::make_trafficnet(run.seed, 32, 1, kNumImageClasses);
  const auto t0 = Clock::now();
  const auto hist = vision::train(model, train, o.train);
  const double train_seconds = seconds_since(t0);
  io::save_model(model, o.out);

  const auto t1 = Clock::now();
  auto rep = metrics::evaluate(vision::labels_of(test), cnn_proba(model, test), image_labels(), "cnn");
  rep.inference_ms = seconds_since(t1) * 1000.0 / static_cast<double>(test.size());
  rep.train_seconds = train_seconds;
  run.result = report_body(rep, run.timing);
  json epochs = json::array();
  for (const auto& e : hist.epochs) epochs.push_back({{"loss", e.loss}, {"accuracy", e.accuracy}});
  run.result["history"] = {{"initial_loss", hist.initial_loss}, {"epochs", epochs}};
  run.result["rows"] = {{"train", train.size()}, {"test", test.size()}};
  run.write(o.report);
  std::cout << "cnn accuracy=" << fmt(rep.scores.accuracy) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

int cmd_evaluate(const std::string& model_path, const std::string& data, const std::string& report,
                 const std::optional<std::uint64_t>& seed) {
  Run run{"evaluate"};
  run.seed = resolve_seed(seed);
  run.config = {{"model", resolve_path(model_path)}, {"data", resolve_path(data)}};
  const auto any = io::load_model(model_path);
  if (const auto* a = std::get_if<timeseries::ArimaModel>(&any)) {
    const auto series = datasynth::load_traffic_csv(data);
    require(series.size() > a->n_obs, ErrorKind::kLength,
            data + ": series has no observations beyond the " + std::to_string(a->n_obs) + " used for fitting");
    const auto actual = series.values().subspan(a->n_obs);
    const auto fc = timeseries::forecast(*a, actual.size());
    double sq = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) sq += (actual[i] - fc.point[i]) * (actual[i] - fc.point[i]);
    run.result = {{"model", "arima"}, {"horizon", actual.size()}, {"mae", timeseries::mae(actual, fc.point)},
                  {"rmse", std::sqrt(sq / static_cast<double>(actual.size()))}};
    run.write(report);
    std::cout << "arima mae=" << fmt(run.result["mae"].get<double>()) << "\n";
    return 0;
  }
  const auto t0 = Clock::now();
  auto s = score_data(any, data);
  auto rep = metrics::evaluate(s.labels, s.proba, s.names, s.model);
  rep.inference_ms = seconds_since(t0) * 1000.0 / static_cast<double>(s.labels.size());
  run.result = report_body(rep, run.timing);
  run.write(report);
  std::cout << s.model << " accuracy=" << fmt(rep.scores.accuracy) << " macro_f1=" << fmt(rep.scores.macro_f1)
            << "\n";
  return 0;
}

int cmd_ensemble(const std::string& models, const std::string& weights, const std::string& data,
                 const std::string& report, const std::optional<std::uint64_t>& seed) {
  Run run{"ensemble"};
  run.seed = resolve_seed(seed);
  const auto paths = split_list(models);
  require(!paths.empty(), ErrorKind::kConfig, "--models needs at least one path");
  std::vector<double> w;
  if (weights.empty()) {
    w.assign(paths.size(), 1.0 / static_cast<double>(paths.size()));
  } else {
    for (const auto& s : split_list(weights)) w.push_back(parse_double(s, "--weights"));
  }
  json resolved = json::array();
  for (const auto& p : paths) resolved.push_back(resolve_path(p));
  run.config = {{"models", resolved}, {"weights", w}, {"data", resolve_path(data)}};
  require(w.size() == paths.size(), ErrorKind::kConfig, "ensemble needs one weight per model");

  std::vector<Matrix> proba;
  std::vector<std::string> names;
  std::vector<int> labels;
  std::vector<std::string> label_names;
  std::string kind;
  for (const auto& p : paths) {
    const auto any = io::load_model(p);
    if (kind.empty()) kind = io::kind_of(any);
    require(io::kind_of(any) == kind, ErrorKind::kSchema, p + ": ensemble members must share a model kind");
    auto s = score_data(any, data);
    proba.push_back(std::move(s.proba));
    names.push_back(s.model);
    labels = std::move(s.labels);
    label_names = std::move(s.names);
  }
  const auto combined = tabular::ensemble_predict(std::span<const Matrix>(proba), w);
  std::string name = "ensemble(";
  for (std::size_t i = 0; i < names.size(); ++i) name += (i ? "," : "") + names[i];
  name += ")";
  auto rep = metrics::evaluate(labels, combined, label_names, name);
  run.result = report_body(rep, run.timing);
  json members = json::array();
  for (std::size_t i = 0; i < proba.size(); ++i) {
    members.push_back({{"model", names[i]}, {"accuracy", metrics::evaluate(labels, proba[i], label_names).scores.accuracy}});
  }
  run.result["members"] = members;
  run.write(report);
  std::cout << name << " accuracy=" << fmt(rep.scores.accuracy) << "\n";
  return 0;
}

// Grid file: JSON object mapping parameter name to a list of values, e.g.
// {"eta": [0.1, 0.3], "max_depth": [3, 4]}. Axis order follows the file.
tabular::ParamGrid load_grid(const std::string& path) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(csv::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, path + ": invalid grid JSON (" + e.what() + ")");
  }
  require(j.is_object() && !j.empty(), ErrorKind::kConfig, path + ": grid must be a non-empty JSON object");
  tabular::ParamGrid grid;
  for (const auto& [name, values] : j.items()) {
    require(values.is_array() && !values.empty(), ErrorKind::kConfig,
            path + ": grid axis '" + name + "' must be a non-empty array");
    std::vector<double> v;
    for (const auto& x : values) {
      require(x.is_number(), ErrorKind::kConfig, path + ": grid axis '" + name + "' holds a non-number");
      v.push_back(x.get<double>());
    }
    grid.axes.emplace_back(name, std::move(v));
  }
  return grid;
}

struct TuneOpts {
  std::string data, grid, report;
  int folds = 3;
  std::size_t max_cells = 0;
  std::optional<std::uint64_t> seed;
  ModelFlags model;
};

int cmd_tune(const TuneOpts& o) {
  Run run{"tune"};
  run.seed = resolve_seed(o.seed);
  const auto grid = load_grid(o.grid);
  json axes = json::array();
  for (const auto& [name, values] : grid.axes) axes.push_back({{"name", name}, {"values", values}});
  run.config = {{"data", resolve_path(o.data)}, {"model", o.model.type}, {"grid", axes},
                {"folds", o.folds}, {"max_cells", o.max_cells}, {"base_params", o.model.to_json()}};
  const auto records = datasynth::load_accidents_csv(o.data);
  require(!records.empty(), ErrorKind::kLength, o.data + ": no records");
  const auto [fm, y] = encode_features(records);
  const auto fit = [&](const Matrix& X, std::span<const int> labels, const tabular::ParamSet& p) {
    return o.model.fit(X, labels, run.seed, p);
  };
  const auto t0 = Clock::now();
  const auto res = tabular::grid_search(fit, fm.values, y, grid, {o.folds, run.seed, o.max_cells});
  run.timing["search_seconds"] = seconds_since(t0);
  json cells = json::array();
  for (const auto& c : res.cells) {
    cells.push_back({{"params", c.params}, {"fold_accuracy", c.fold_accuracy}, {"mean_accuracy", c.mean_accuracy}});
  }
  run.result = {{"best", res.best}, {"best_index", res.best_index}, {"cells", cells}};
  run.write(o.report);
  std::cout << "best=" << json(res.best).dump() << " mean_accuracy=" << fmt(res.cells[res.best_index].mean_accuracy)
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchOpts {
  std::string what, model, data, sizes, report;
  std::size_t repetitions = 200;
  std::optional<std::uint64_t> seed;
  ModelFlags fit;
};

int cmd_bench(const BenchOpts& o) {
  const auto seed = resolve_seed(o.seed);
  require(!o.report.empty(), ErrorKind::kConfig, "--report is required");
  if (o.what == "scaling") {
    require(!o.sizes.empty(), ErrorKind::kConfig, "bench scaling needs --sizes");
    std::vector<std::size_t> sizes;
    for (const auto& s : split_list(o.sizes)) sizes.push_back(parse_size(s, "--sizes"));
    const auto rows = metrics::bench_scaling(
        [&](std::size_t n, std::uint64_t s) {
          datasynth::AccidentGenSpec spec;
          spec.n = n;
          spec.seed = s;
          const auto [fm, y] = encode_features(datasynth::gen_accidents(spec));
          (void)o.fit.fit(fm.values, y, s);
        },
        sizes, seed);
    write_text(o.report, metrics::scaling_csv(rows));
    return 0;
  }
  require(!o.model.empty(), ErrorKind::kConfig, "bench latency needs --model");
  const auto any = io::load_model(o.model);
  std::function<void(std::size_t)> predict;
  std::size_t n_samples = 0;
  std::vector<AccidentRecord> records;
  std::vector<Matrix> rows;
  std::vector<ImageSample> images;
  std::vector<double> sink(16);
  if (const auto* s = std::get_if<tabular::SeverityModel>(&any)) {
    if (o.data.empty()) {
      datasynth::AccidentGenSpec spec;
      spec.n = 256;
      spec.seed = seed;
      records = datasynth::gen_accidents(spec);
    } else {
      records = datasynth::load_accidents_csv(o.data);
    }
    require(!records.empty(), ErrorKind::kLength, "no samples to benchmark");
    // Encoding is part of the measured call, matching a raw-record request.
    predict = [&, s](std::size_t i) {
      const auto p = tabular::predict_proba(*s, std::span<const AccidentRecord>(&records[i], 1));
      sink[0] += p(0, 0);
    };
    n_samples = records.size();
  } else if (const auto* c = std::get_if<vision::CnnModel>(&any)) {
    if (o.data.empty()) {
      datasynth::ImageGenSpec spec;
      spec.n = 64;
      spec.seed = seed;
      images = datasynth::gen_images(spec);
    } else {
      images = datasynth::load_image_dir(o.data, c->input_height);
    }
    require(!images.empty(), ErrorKind::kLength, "no samples to benchmark");
    predict = [&, c](std::size_t i) { sink[0] += vision::predict_proba(*c, std::span(&images[i], 1))(0, 0); };
    n_samples = images.size();
  } else {
    const auto& a = std::get<timeseries::ArimaModel>(any);
    predict = [&](std::size_t) { sink[0] += timeseries::forecast(a, 24).point[0]; };
    n_samples = 1;
  }
  const auto stats = metrics::bench_latency(predict, n_samples, o.repetitions);
  std::ostringstream os;
  csv::Writer w(os);
  w.row({"model", "samples", "repetitions", "mean_ms", "p50_ms", "p95_ms", "max_ms", "hardware"});
  w.row({io::kind_of(any), std::to_string(n_samples), std::to_string(stats.repetitions), fmt(stats.mean_ms),
         fmt(stats.p50_ms), fmt(stats.p95_ms), fmt(stats.max_ms), stats.hardware});
  write_text(o.report, os.str());
  std::cout << "p95_ms=" << fmt(stats.p95_ms) << " (" << stats.hardware << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// text
// ---------------------------------------------------------------------------

int cmd_wordfreq(const std::string& texts_path, std::size_t top, const std::string& stopwords_path,
                 const std::string& out) {
  require(top >= 1, ErrorKind::kConfig, "--top must be at least 1");
  std::vector<std::string> texts;
  std::istringstream in(csv::read_file(texts_path));
  for (std::string line; std::getline(in, line);) texts.push_back(line);
  const auto stop = stopwords_path.empty() ? datasynth::default_stopwords() : datasynth::load_stopwords(stopwords_path);
  auto terms = datasynth::word_freq(texts, stop);
  if (terms.size() > top) terms.resize(top);
  write_text(out, datasynth::word_freq_csv(terms));
  return 0;
}

// One line, key=value, message JSON-quoted so it never spans lines.
void report_error(std::string_view kind, int code, const std::string& message) {
  std::cerr << "trafficlens: error kind=" << kind << " exit=" << code << " message=" << json(message).dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trafficlens: traffic forecasting, accident severity and image classification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::function<int()> action;

  // synth
  SynthOpts synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  c_synth->add_option("kind", synth.what, "traffic, accidents, images or texts")
      ->required()
      ->check(CLI::IsMember({"traffic", "accidents", "images", "texts"}));
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--seed", synth.seed, "Seed (default 42 or TRAFFICLENS_SEED)");
  c_synth->add_option("--n", synth.n, "Number of hours / records / images / texts");
  c_synth->add_option("--base", synth.traffic.base, "traffic: base level");
  c_synth->add_option("--slope", synth.traffic.slope, "traffic: trend per hour");
  c_synth->add_option("--daily-amplitude", synth.traffic.daily_amplitude, "traffic: daily amplitude");
  c_synth->add_option("--weekly-amplitude", synth.traffic.weekly_amplitude, "traffic: weekly amplitude");
  c_synth->add_option("--sigma", synth.traffic.sigma, "traffic: noise standard deviation");
  c_synth->add_flag("--checkerboard", synth.checkerboard, "accidents: add the XOR interaction term");
  c_synth->add_option("--size", synth.image_size, "images: side length");
  c_synth->add_option("--noise", synth.noise, "images: pixel noise sigma");
  c_synth->add_option("--report", synth.report, "Optional JSON manifest");
  c_synth->callback([&] { action = [&] { return cmd_synth(synth); }; });

  // fit-arima
  FitArimaOpts fa;
  auto* c_fa = app.add_subcommand("fit-arima", "Fit an ARIMA model to an hourly series");
  c_fa->add_option("--series", fa.series, "Series CSV (timestamp_hour,volume)")->required();
  c_fa->add_option("--order", fa.order, "p,d,q")->capture_default_str();
  c_fa->add_option("--out", fa.out, "Model file")->required();
  c_fa->add_option("--holdout", fa.holdout, "Trailing hours kept out of the fit")->capture_default_str();
  c_fa->add_option("--seasonal-period", fa.seasonal_period, "Seasonal profile period, 0 disables")->capture_default_str();
  c_fa->add_option("--max-iterations", fa.max_iterations, "Optimizer iteration cap")->capture_default_str();
  c_fa->add_option("--report", fa.report, "JSON report");
  c_fa->callback([&] { action = [&] { return cmd_fit_arima(fa); }; });

  // forecast
  std::string fc_model, fc_out;
  std::size_t fc_horizon = 24;
  auto* c_fc = app.add_subcommand("forecast", "Forecast from a fitted ARIMA model");
  c_fc->add_option("--model", fc_model, "Model file")->required();
  c_fc->add_option("--horizon", fc_horizon, "Hours ahead")->capture_default_str();
  c_fc->add_option("--out", fc_out, "Forecast CSV")->required();
  c_fc->callback([&] { action = [&] { return cmd_forecast(fc_model, fc_horizon, fc_out); }; });

  // decompose
  std::string dc_series, dc_out;
  std::size_t dc_period = 24;
  auto* c_dc = app.add_subcommand("decompose", "Additive trend/seasonal/residual decomposition");
  c_dc->add_option("--series", dc_series, "Series CSV")->required();
  c_dc->add_option("--period", dc_period, "Seasonal period")->capture_default_str();
  c_dc->add_option("--out", dc_out, "Output CSV")->required();
  c_dc->callback([&] { action = [&] { return cmd_decompose(dc_series, dc_period, dc_out); }; });

  // train-severity
  TrainSeverityOpts ts;
  auto* c_ts = app.add_subcommand("train-severity", "Train an accident severity classifier");
  c_ts->add_option("--data", ts.data, "Accidents CSV")->required();
  add_model_flags(c_ts, ts.model);
  c_ts->add_option("--balance", ts.balance, "down, over or none")->capture_default_str()->check(CLI::IsMember({"down", "over", "none"}));
  c_ts->add_option("--split", ts.split, "Train fraction (stratified)")->capture_default_str();
  c_ts->add_option("--out", ts.out, "Model file")->required();
  c_ts->add_option("--report", ts.report, "JSON report");
  c_ts->add_option("--seed", ts.seed, "Seed");
  c_ts->callback([&] { action = [&] { return cmd_train_severity(ts); }; });

  // importance
  std::string im_model, im_out;
  auto* c_im = app.add_subcommand("importance", "Per-feature gain of a tree model");
  c_im->add_option("--model", im_model, "Model file")->required();
  c_im->add_option("--out", im_out, "Output CSV")->required();
  c_im->callback([&] { action = [&] { return cmd_importance(im_model, im_out); }; });

  // train-image
  TrainImageOpts ti;
  auto* c_ti = app.add_subcommand("train-image", "Train the image classifier");
  c_ti->add_option("--dir", ti.dir, "Image directory (one subdirectory per class)")->required();
  c_ti->add_option("--epochs", ti.train.epochs, "Epochs")->capture_default_str();
  c_ti->add_option("--batch-size", ti.train.batch_size, "Mini-batch size")->capture_default_str();
  c_ti->add_option("--lr", ti.train.learning_rate, "Learning rate")->capture_default_str();
  c_ti->add_option("--momentum", ti.train.momentum, "SGD momentum")->capture_default_str();
  c_ti->add_flag("--augment", ti.train.augment, "Random flips, rotations and scaling");
  c_ti->add_option("--split", ti.split, "Train fraction (stratified)")->capture_default_str();
  c_ti->add_option("--subsample", ti.subsample, "Use a stratified subset of this many images, 0 = all")->capture_default_str();
  c_ti->add_option("--out", ti.out, "Model file")->required();
  c_ti->add_option("--report", ti.report, "JSON report");
  c_ti->add_option("--seed", ti.seed, "Seed");
  c_ti->callback([&] { action = [&] { return cmd_train_image(ti); }; });

  // evaluate
  std::string ev_model, ev_data, ev_report;
  std::optional<std::uint64_t> ev_seed;
  auto* c_ev = app.add_subcommand("evaluate", "Evaluate a model on a dataset");
  c_ev->add_option("--model", ev_model, "Model file")->required();
  c_ev->add_option("--data", ev_data, "Accidents CSV, image directory or series CSV")->required();
  c_ev->add_option("--report", ev_report, "JSON report");
  c_ev->add_option("--seed", ev_seed, "Seed echoed into the report");
  c_ev->callback([&] { action = [&] { return cmd_evaluate(ev_model, ev_data, ev_report, ev_seed); }; });

  // ensemble
  std::string en_models, en_weights, en_data, en_report;
  std::optional<std::uint64_t> en_seed;
  auto* c_en = app.add_subcommand("ensemble", "Weighted soft-vote of several models");
  c_en->add_option("--models", en_models, "Comma-separated model files")->required();
  c_en->add_option("--weights", en_weights, "Comma-separated weights summing to 1 (default equal)");
  c_en->add_option("--data", en_data, "Accidents CSV or image directory")->required();
  c_en->add_option("--report", en_report, "JSON report");
  c_en->add_option("--seed", en_seed, "Seed echoed into the report");
  c_en->callback([&] { action = [&] { return cmd_ensemble(en_models, en_weights, en_data, en_report, en_seed); }; });

  // tune
  TuneOpts tu;
  auto* c_tu = app.add_subcommand("tune", "Cross-validated grid search");
  c_tu->add_option("--data", tu.data, "Accidents CSV")->required();
  add_model_flags(c_tu, tu.model);
  c_tu->add_option("--grid", tu.grid, "Grid JSON file")->required();
  c_tu->add_option("--folds", tu.folds, "Folds")->capture_default_str();
  c_tu->add_option("--max-cells", tu.max_cells, "Seeded random subset of cells, 0 = all")->capture_default_str();
  c_tu->add_option("--report", tu.report, "JSON report");
  c_tu->add_option("--seed", tu.seed, "Seed");
  c_tu->callback([&] { action = [&] { return cmd_tune(tu); }; });

  // bench
  BenchOpts be;
  auto* c_be = app.add_subcommand("bench", "Latency or training-time scaling benchmark");
  c_be->add_option("what", be.what, "latency or scaling")->required()->check(CLI::IsMember({"latency", "scaling"}));
  c_be->add_option("--model", be.model, "latency: model file; scaling: gbdt, rf or logistic");
  c_be->add_option("--data", be.data, "latency: samples (default synthetic)");
  c_be->add_option("--sizes", be.sizes, "scaling: ascending comma-separated record counts");
  c_be->add_option("--repetitions", be.repetitions, "latency: timed calls")->capture_default_str();
  c_be->add_option("--report", be.report, "CSV report")->required();
  c_be->add_option("--seed", be.seed, "Seed");
  c_be->callback([&] {
    action = [&] {
      if (be.what == "scaling") {
        be.fit.type = be.model.empty() ? "gbdt" : be.model;
        require(be.fit.type == "gbdt" || be.fit.type == "rf" || be.fit.type == "logistic", ErrorKind::kConfig,
                "bench scaling --model must be gbdt, rf or logistic");
      }
      return cmd_bench(be);
    };
  });

  // wordfreq
  std::string wf_texts, wf_stop, wf_out;
  std::size_t wf_top = 20;
  auto* c_wf = app.add_subcommand("wordfreq", "Most frequent terms in free-text narratives");
  c_wf->add_option("--texts", wf_texts, "Text file, one narrative per line")->required();
  c_wf->add_option("--top", wf_top, "Number of terms")->capture_default_str();
  c_wf->add_option("--stopwords", wf_stop, "Stop-word file (default built-in list)");
  c_wf->add_option("--out", wf_out, "Output CSV")->required();
  c_wf->callback([&] { action = [&] { return cmd_wordfreq(wf_texts, wf_top, wf_stop, wf_out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", 1, e.what());
    return 1;
  }

  try {
    return action();
  } catch (const Error& e) {
    const int code = exit_code(e.kind());
    report_error(to_string(e.kind()), code, e.what());
    return code;
  } catch (const fs::filesystem_error& e) {
    report_error("io", 2, e.what());
    return 2;
  } catch (const std::exception& e) {
    report_error("internal", 2, e.what());
    return 2;
  }
}
