#include "rmfs/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

namespace rmfs::scenario {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw ScenarioError(ScenarioError::Kind::invalid_config, msg); }

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

// ---------------------------------------------------------------------------
// Distributions

double Distribution::sample(Rng& rng) const {
  switch (kind) {
    case Kind::constant:
      return a;
    case Kind::uniform:
      return a + (b - a) * uniform01(rng);
    case Kind::normal:
      return std::normal_distribution<double>(a, b)(rng);
    case Kind::gamma:
      return std::gamma_distribution<double>(a, b)(rng);
  }
  return a;
}

int Distribution::sample_count(Rng& rng) const {
  const double v = std::round(sample(rng));
  return v < 1.0 ? 1 : static_cast<int>(std::min(v, 1e9));
}

double Distribution::mean() const {
  switch (kind) {
    case Kind::constant:
    case Kind::normal:
      return a;
    case Kind::uniform:
      return 0.5 * (a + b);
    case Kind::gamma:
      return a * b;
  }
  return a;
}

void Distribution::validate(const char* what) const {
  if (!std::isfinite(a) || !std::isfinite(b)) invalid(fmt::format("{}: non-finite parameter", what));
  switch (kind) {
    case Kind::constant:
      break;
    case Kind::uniform:
      if (b < a) invalid(fmt::format("{}: uniform max < min", what));
      break;
    case Kind::normal:
      if (b < 0) invalid(fmt::format("{}: negative stddev", what));
      break;
    case Kind::gamma:
      if (a <= 0 || b <= 0) invalid(fmt::format("{}: gamma shape and scale must be positive", what));
      break;
  }
}

// ---------------------------------------------------------------------------
// Arrivals

PiecewiseRate::PiecewiseRate(std::vector<RatePiece> pieces) : pieces_(std::move(pieces)) {
  std::sort(pieces_.begin(), pieces_.end(), [](const RatePiece& x, const RatePiece& y) { return x.start < y.start; });
  for (const auto& p : pieces_) {
    if (!(p.rate_per_hour >= 0.0) || !std::isfinite(p.rate_per_hour)) invalid("negative or non-finite arrival rate");
  }
}

double PiecewiseRate::per_second(double t) const {
  double r = 0.0;
  for (const auto& p : pieces_) {
    if (p.start <= t) r = p.rate_per_hour;
    else break;
  }
  return r / 3600.0;
}

double PiecewiseRate::supremum_per_second() const {
  double r = 0.0;
  for (const auto& p : pieces_) r = std::max(r, p.rate_per_hour);
  return r / 3600.0;
}

double ThinnedPoissonProcess::next(double from, Rng& rng) const {
  const double sup = rate_.supremum_per_second();
  if (sup <= 0.0) return kInf;
  double t = from;
  for (;;) {
    t += -std::log(1.0 - uniform01(rng)) / sup;
    if (uniform01(rng) * sup < rate_.per_second(t)) return t;
    // Rate stays zero from here on: no further arrivals.
    if (!rate_.pieces().empty() && t >= rate_.pieces().back().start && rate_.pieces().back().rate_per_hour == 0.0) {
      return kInf;
    }
  }
}

// ---------------------------------------------------------------------------
// Config

void ScenarioConfig::validate() const {
  if (!(duration > 0)) invalid("duration_s must be positive");
  if (sku_count < 1) invalid("sku_count must be >= 1");
  popularity.validate("popularity");
  lines_per_order.validate("lines_per_order");
  units_per_line.validate("units_per_line");
  unit_space.validate("unit_space");
  replenishment_order_size.validate("replenishment_order_size");
  if (return_order_fraction < 0 || return_order_fraction > 1) invalid("return_order_fraction outside [0, 1]");
  if (!(pause_low >= 0 && pause_low <= pause_high && pause_high <= 1)) {
    invalid("pause thresholds must satisfy 0 <= low <= high <= 1");
  }
  if (initial_fill < 0 || initial_fill > 1) invalid("initial_fill outside [0, 1]");
  if (!(position_sample_interval > 0)) invalid("position_sample_interval_s must be positive");
  if (!(bucket > 0)) invalid("bucket_s must be positive");
  if (batches && !(batches->period > 0)) invalid("batches.period_s must be positive");
  if (const auto* b = std::get_if<ConstantBacklog>(&regime)) {
    if (b->pick_backlog < 0 || b->replenishment_backlog < 0) invalid("negative backlog");
  }
}

namespace {

Distribution distribution_from_json(const json& j, const char* what) {
  if (j.is_number()) return Distribution::constant(j.get<double>());
  if (!j.is_object() || !j.contains("type")) invalid(fmt::format("{}: expected number or {{\"type\": ...}}", what));
  const auto type = j.at("type").get<std::string>();
  try {
    if (type == "constant") return Distribution::constant(j.at("value").get<double>());
    if (type == "uniform") return Distribution::uniform(j.at("min").get<double>(), j.at("max").get<double>());
    if (type == "normal") return Distribution::normal(j.at("mean").get<double>(), j.at("stddev").get<double>());
    if (type == "gamma") return Distribution::gamma(j.at("shape").get<double>(), j.at("scale").get<double>());
  } catch (const json::exception& e) {
    invalid(fmt::format("{}: {}", what, e.what()));
  }
  invalid(fmt::format("{}: unknown distribution type '{}'", what, type));
}

json distribution_to_json(const Distribution& d) {
  switch (d.kind) {
    case Distribution::Kind::constant:
      return {{"type", "constant"}, {"value", d.a}};
    case Distribution::Kind::uniform:
      return {{"type", "uniform"}, {"min", d.a}, {"max", d.b}};
    case Distribution::Kind::normal:
      return {{"type", "normal"}, {"mean", d.a}, {"stddev", d.b}};
    case Distribution::Kind::gamma:
      return {{"type", "gamma"}, {"shape", d.a}, {"scale", d.b}};
  }
  return {};
}

std::vector<RatePiece> rate_from_json(const json& j, const char* what) {
  std::vector<RatePiece> out;
  if (j.is_number()) {
    out.push_back({0.0, j.get<double>()});
    return out;
  }
  if (!j.is_array()) invalid(fmt::format("{}: expected number or array", what));
  for (const auto& p : j) out.push_back({p.value("start_s", 0.0), p.at("rate_per_h").get<double>()});
  return out;
}

json rate_to_json(const std::vector<RatePiece>& pieces) {
  json a = json::array();
  for (const auto& p : pieces) a.push_back({{"start_s", p.start}, {"rate_per_h", p.rate_per_hour}});
  return a;
}

}  // namespace

namespace {

// Rejects keys outside `known` so misspelled fields do not fall back silently.
void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) invalid(fmt::format("{}: expected an object", where));
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      invalid(fmt::format("{}: unknown field '{}'", where, key));
    }
  }
}

}  // namespace

ScenarioConfig scenario_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  ScenarioConfig c;
  reject_unknown(j,
                 {"duration_s", "sku_count", "popularity", "lines_per_order", "units_per_line", "unit_space",
                  "replenishment_order_size", "return_order_fraction", "initial_fill", "position_sample_interval_s",
                  "bucket_s", "pause_thresholds", "regime", "batches"},
                 "scenario");
  try {
    c.duration = j.value("duration_s", c.duration);
    c.sku_count = j.value("sku_count", c.sku_count);
    if (j.contains("popularity")) c.popularity = distribution_from_json(j["popularity"], "popularity");
    if (j.contains("lines_per_order")) c.lines_per_order = distribution_from_json(j["lines_per_order"], "lines_per_order");
    if (j.contains("units_per_line")) c.units_per_line = distribution_from_json(j["units_per_line"], "units_per_line");
    if (j.contains("unit_space")) c.unit_space = distribution_from_json(j["unit_space"], "unit_space");
    if (j.contains("replenishment_order_size")) {
      c.replenishment_order_size = distribution_from_json(j["replenishment_order_size"], "replenishment_order_size");
    }
    c.return_order_fraction = j.value("return_order_fraction", c.return_order_fraction);
    c.initial_fill = j.value("initial_fill", c.initial_fill);
    c.position_sample_interval = j.value("position_sample_interval_s", c.position_sample_interval);
    c.bucket = j.value("bucket_s", c.bucket);
    if (j.contains("pause_thresholds")) {
      const auto& p = j["pause_thresholds"];
      reject_unknown(p, {"high", "low"}, "pause_thresholds");
      c.pause_high = p.value("high", c.pause_high);
      c.pause_low = p.value("low", c.pause_low);
    }
    if (j.contains("regime")) {
      const auto& r = j["regime"];
      const auto type = r.at("type").get<std::string>();
      if (type == "constant_backlog") {
        reject_unknown(r, {"type", "pick_backlog", "replenishment_backlog"}, "regime");
        ConstantBacklog b;
        b.pick_backlog = r.value("pick_backlog", b.pick_backlog);
        b.replenishment_backlog = r.value("replenishment_backlog", b.replenishment_backlog);
        c.regime = b;
      } else if (type == "poisson") {
        reject_unknown(r, {"type", "pick_rate", "replenishment_rate"}, "regime");
        PoissonRegime p;
        if (r.contains("pick_rate")) p.pick_rate = rate_from_json(r["pick_rate"], "pick_rate");
        if (r.contains("replenishment_rate")) {
          p.replenishment_rate = rate_from_json(r["replenishment_rate"], "replenishment_rate");
        }
        c.regime = p;
      } else if (type == "file") {
        reject_unknown(r, {"type", "path"}, "regime");
        std::filesystem::path path = r.at("path").get<std::string>();
        if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
        c.regime = FileRegime{path};
      } else {
        invalid(fmt::format("regime: unknown type '{}'", type));
      }
    }
    if (j.contains("batches") && !j["batches"].is_null()) {
      const auto& b = j["batches"];
      reject_unknown(b, {"period_s", "pick_orders", "replenishment_orders"}, "batches");
      BatchSchedule s;
      s.period = b.value("period_s", s.period);
      s.pick_orders = b.value("pick_orders", 0);
      s.replenishment_orders = b.value("replenishment_orders", 0);
      c.batches = s;
    }
  } catch (const json::exception& e) {
    invalid(fmt::format("scenario: {}", e.what()));
  }
  c.validate();
  return c;
}

json scenario_config_to_json(const ScenarioConfig& c) {
  json j;
  j["duration_s"] = c.duration;
  j["sku_count"] = c.sku_count;
  j["popularity"] = distribution_to_json(c.popularity);
  j["lines_per_order"] = distribution_to_json(c.lines_per_order);
  j["units_per_line"] = distribution_to_json(c.units_per_line);
  j["unit_space"] = distribution_to_json(c.unit_space);
  j["replenishment_order_size"] = distribution_to_json(c.replenishment_order_size);
  j["return_order_fraction"] = c.return_order_fraction;
  j["initial_fill"] = c.initial_fill;
  j["position_sample_interval_s"] = c.position_sample_interval;
  j["bucket_s"] = c.bucket;
  j["pause_thresholds"] = {{"high", c.pause_high}, {"low", c.pause_low}};
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, ConstantBacklog>) {
          j["regime"] = {{"type", "constant_backlog"},
                         {"pick_backlog", r.pick_backlog},
                         {"replenishment_backlog", r.replenishment_backlog}};
        } else if constexpr (std::is_same_v<T, PoissonRegime>) {
          j["regime"] = {{"type", "poisson"},
                         {"pick_rate", rate_to_json(r.pick_rate)},
                         {"replenishment_rate", rate_to_json(r.replenishment_rate)}};
        } else {
          j["regime"] = {{"type", "file"}, {"path", r.path.string()}};
        }
      },
      c.regime);
  if (c.batches) {
    j["batches"] = {{"period_s", c.batches->period},
                    {"pick_orders", c.batches->pick_orders},
                    {"replenishment_orders", c.batches->replenishment_orders}};
  }
  return j;
}

ScenarioConfig load_scenario_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) invalid(fmt::format("cannot open scenario file '{}'", file.string()));
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    invalid(fmt::format("{}: {}", file.string(), e.what()));
  }
  return scenario_config_from_json(j, file.parent_path());
}

// ---------------------------------------------------------------------------
// Catalog and inventory

std::vector<Sku> generate_sku_catalog(const ScenarioConfig& config, int n, Rng& rng) {
  if (n < 1) invalid("sku count must be >= 1");
  auto positive = [&](const Distribution& d, bool allow_zero) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const double v = d.sample(rng);
      if (v > 0.0 || (allow_zero && v == 0.0)) return v;
    }
    invalid("distribution produced no admissible sample in 1000 draws");
  };
  std::vector<Sku> skus;
  skus.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Sku s;
    s.id = SkuId(i);
    s.popularity_weight = positive(config.popularity, true);
    s.unit_space = positive(config.unit_space, false);
    skus.push_back(s);
  }
  return skus;
}

std::optional<std::size_t> draw_weighted(const std::vector<Sku>& catalog, const std::vector<bool>& eligible, Rng& rng) {
  double total = 0.0;
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    if (eligible[i]) total += catalog[i].popularity_weight;
  }
  if (total <= 0.0) {
    // All eligible weights zero: fall back to uniform over eligible.
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < catalog.size(); ++i) {
      if (eligible[i]) idx.push_back(i);
    }
    if (idx.empty()) return std::nullopt;
    return idx[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(idx.size()))];
  }
  double r = uniform01(rng) * total;
  std::optional<std::size_t> last;
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    if (!eligible[i]) continue;
    last = i;
    r -= catalog[i].popularity_weight;
    if (r < 0.0) return i;
  }
  return last;
}

void seed_initial_inventory(World& world, double fill, Rng& rng) {
  if (world.skus.empty()) invalid("cannot seed inventory without SKUs");
  world.ledger.resize(world.skus.size());
  std::vector<bool> all(world.skus.size(), true);
  double min_space = kInf;
  for (const auto& s : world.skus) min_space = std::min(min_space, s.unit_space);
  for (auto& pod : world.pods) {
    const double target = fill * pod.capacity;
    int misses = 0;
    while (pod.occupied + min_space <= target + 1e-9 && misses < 64) {
      const auto idx = draw_weighted(world.skus, all, rng);
      const Sku& sku = world.skus[*idx];
      // Small batches keep pods mixed.
      const int want = 1 + static_cast<int>(uniform01(rng) * 4.0);
      const int fit = static_cast<int>(std::floor((target - pod.occupied) / sku.unit_space + 1e-9));
      const int units = std::min(want, fit);
      if (units <= 0) {
        ++misses;
        continue;
      }
      seed_units(world, pod.id, sku.id, units);
    }
  }
}

// ---------------------------------------------------------------------------
// Order sampling

PickOrder sample_pick_order(const ScenarioConfig& config, const std::vector<Sku>& catalog,
                            const std::vector<long>& available, double t, Rng& rng) {
  if (available.size() != catalog.size()) invalid("availability vector does not match catalog");
  std::vector<long> left = available;
  PickOrder order;
  order.submit_time = t;
  const int lines = config.lines_per_order.sample_count(rng);
  std::vector<bool> eligible(catalog.size());
  for (int l = 0; l < lines; ++l) {
    int units = config.units_per_line.sample_count(rng);
    std::optional<std::size_t> pick;
    while (units >= 1) {
      for (std::size_t i = 0; i < catalog.size(); ++i) eligible[i] = left[i] >= units;
      pick = draw_weighted(catalog, eligible, rng);
      if (pick) break;
      units /= 2;  // shrink the line until some SKU covers it
    }
    if (!pick) break;
    left[*pick] -= units;
    if (auto* line = order.line_for(SkuId(static_cast<int>(*pick)))) {
      line->requested += units;
    } else {
      order.lines.push_back(OrderLine{SkuId(static_cast<int>(*pick)), units, 0, 0});
    }
  }
  if (order.lines.empty()) throw ScenarioError(ScenarioError::Kind::no_stock, "no SKU has available stock");
  return order;
}

ReplenishmentOrder sample_replenishment_order(const ScenarioConfig& config, const std::vector<Sku>& catalog,
                                              double t, Rng& rng, double max_space) {
  std::vector<bool> eligible(catalog.size());
  for (std::size_t i = 0; i < catalog.size(); ++i) eligible[i] = catalog[i].unit_space <= max_space;
  const auto idx = draw_weighted(catalog, eligible, rng);
  if (!idx) invalid("no SKU fits into an empty pod");
  ReplenishmentOrder r;
  r.sku = catalog[*idx].id;
  r.submit_time = t;
  r.is_return = uniform01(rng) < config.return_order_fraction;
  r.units = r.is_return ? 1 : config.replenishment_order_size.sample_count(rng);
  const double cap = std::floor(max_space / catalog[*idx].unit_space + 1e-9);
  if (cap < static_cast<double>(r.units)) r.units = std::max(static_cast<int>(cap), 1);
  return r;
}

// ---------------------------------------------------------------------------
// Order files

std::vector<OrderRecord> parse_order_text(const std::string& text, const std::string& source) {
  std::vector<OrderRecord> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw ScenarioError(ScenarioError::Kind::malformed_order_file, fmt::format("{}:{}: {}", source, lineno, msg));
  };
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(trim(f));
    if (fields.size() != 3) fail("expected 'type, submit_time_s, sku:units[;sku:units]'");
    OrderRecord rec;
    if (fields[0] != "P" && fields[0] != "R") fail(fmt::format("unknown order type '{}'", fields[0]));
    rec.type = fields[0][0];
    try {
      std::size_t pos = 0;
      rec.submit_time = std::stod(fields[1], &pos);
      if (pos != fields[1].size()) fail("bad submit time");
    } catch (const std::logic_error&) {
      fail("bad submit time");
    }
    if (!(rec.submit_time >= 0) || !std::isfinite(rec.submit_time)) fail("submit time must be finite and >= 0");
    std::stringstream ls(fields[2]);
    std::string item;
    while (std::getline(ls, item, ';')) {
      item = trim(item);
      const auto colon = item.find(':');
      if (colon == std::string::npos) fail(fmt::format("bad line item '{}'", item));
      int sku = -1;
      int units = 0;
      try {
        std::size_t p1 = 0;
        std::size_t p2 = 0;
        const std::string a = trim(item.substr(0, colon));
        const std::string b = trim(item.substr(colon + 1));
        sku = std::stoi(a, &p1);
        units = std::stoi(b, &p2);
        if (p1 != a.size() || p2 != b.size()) fail(fmt::format("bad line item '{}'", item));
      } catch (const std::logic_error&) {
        fail(fmt::format("bad line item '{}'", item));
      }
      if (sku < 0 || units < 1) fail(fmt::format("bad line item '{}'", item));
      rec.lines.emplace_back(SkuId(sku), units);
    }
    if (rec.lines.empty()) fail("order without lines");
    if (rec.type == 'R' && rec.lines.size() != 1) fail("replenishment orders carry exactly one line");
    out.push_back(std::move(rec));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const OrderRecord& a, const OrderRecord& b) { return a.submit_time < b.submit_time; });
  return out;
}

std::vector<OrderRecord> parse_order_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw ScenarioError(ScenarioError::Kind::malformed_order_file,
                        fmt::format("cannot open order file '{}'", file.string()));
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_order_text(ss.str(), file.string());
}

// ---------------------------------------------------------------------------
// Order stream

OrderStream::OrderStream(ScenarioConfig config, std::vector<Sku> catalog, double max_repl_space, std::uint64_t seed)
    : config_(std::move(config)),
      catalog_(std::move(catalog)),
      max_repl_space_(max_repl_space),
      rng_(seed),
      arrival_rng_(seed ^ 0xA5A5A5A5DEADBEEFull) {
  config_.validate();
  if (const auto* p = std::get_if<PoissonRegime>(&config_.regime)) {
    pick_process_.emplace(PiecewiseRate(p->pick_rate));
    repl_process_.emplace(PiecewiseRate(p->replenishment_rate));
    next_pick_ = pick_process_->next(0.0, arrival_rng_);
    next_repl_ = repl_process_->next(0.0, arrival_rng_);
  } else if (const auto* f = std::get_if<FileRegime>(&config_.regime)) {
    file_orders_ = parse_order_file(f->path);
    for (const auto& rec : file_orders_) {
      for (const auto& [sku, units] : rec.lines) {
        if (sku.index() >= catalog_.size()) {
          throw ScenarioError(ScenarioError::Kind::malformed_order_file,
                              fmt::format("{}: unknown SKU {}", f->path.string(), sku.value));
        }
      }
    }
  }
  next_batch_ = config_.batches ? 0.0 : kInf;
}

void OrderStream::update_pauses(double fill) {
  if (!repl_paused_ && fill >= config_.pause_high) repl_paused_ = true;
  else if (repl_paused_ && fill < config_.pause_low) repl_paused_ = false;
  if (!picks_paused_ && fill <= 1.0 - config_.pause_high) picks_paused_ = true;
  else if (picks_paused_ && fill > 1.0 - config_.pause_low) picks_paused_ = false;
}

bool OrderStream::emit_pick(std::vector<Emission>& out, std::vector<long>& available, double t) {
  try {
    PickOrder o = sample_pick_order(config_, catalog_, available, t, rng_);
    for (const auto& l : o.lines) available[l.sku.index()] -= l.requested;
    out.push_back({t, std::move(o)});
    return true;
  } catch (const ScenarioError& e) {
    if (e.kind() != ScenarioError::Kind::no_stock) throw;
    return false;
  }
}

bool OrderStream::emit_replenishment(std::vector<Emission>& out, double t) {
  out.push_back({t, sample_replenishment_order(config_, catalog_, t, rng_, max_repl_space_)});
  return true;
}

std::vector<Emission> OrderStream::step(const StreamView& view, double t) {
  std::vector<Emission> out;
  update_pauses(view.fill);
  std::vector<long> available = view.available;
  available.resize(catalog_.size(), 0);

  if (const auto* b = std::get_if<ConstantBacklog>(&config_.regime)) {
    for (int open = view.open_pick_orders; !picks_paused_ && open < b->pick_backlog; ++open) {
      if (!emit_pick(out, available, t)) break;
      ++pick_arrivals_;
    }
    for (int open = view.open_replenishment_orders; !repl_paused_ && open < b->replenishment_backlog; ++open) {
      emit_replenishment(out, t);
      ++repl_arrivals_;
    }
  } else if (pick_process_) {
    while (next_pick_ <= t) {
      ++pick_arrivals_;
      if (picks_paused_ || !emit_pick(out, available, next_pick_)) ++dropped_;
      next_pick_ = pick_process_->next(next_pick_, arrival_rng_);
    }
    while (next_repl_ <= t) {
      ++repl_arrivals_;
      if (repl_paused_) ++dropped_;
      else emit_replenishment(out, next_repl_);
      next_repl_ = repl_process_->next(next_repl_, arrival_rng_);
    }
  } else {
    while (file_cursor_ < file_orders_.size() && file_orders_[file_cursor_].submit_time <= t) {
      const auto& rec = file_orders_[file_cursor_++];
      if (rec.type == 'P') {
        PickOrder o;
        o.submit_time = rec.submit_time;
        for (const auto& [sku, units] : rec.lines) {
          if (auto* l = o.line_for(sku)) l->requested += units;
          else o.lines.push_back(OrderLine{sku, units, 0, 0});
        }
        ++pick_arrivals_;
        out.push_back({rec.submit_time, std::move(o)});
      } else {
        ReplenishmentOrder r;
        r.sku = rec.lines.front().first;
        r.units = rec.lines.front().second;
        r.submit_time = rec.submit_time;
        ++repl_arrivals_;
        out.push_back({rec.submit_time, r});
      }
    }
  }

  while (next_batch_ <= t) {
    for (int i = 0; i < config_.batches->pick_orders; ++i) {
      ++pick_arrivals_;
      if (picks_paused_ || !emit_pick(out, available, next_batch_)) ++dropped_;
    }
    for (int i = 0; i < config_.batches->replenishment_orders; ++i) {
      ++repl_arrivals_;
      if (repl_paused_) ++dropped_;
      else emit_replenishment(out, next_batch_);
    }
    next_batch_ += config_.batches->period;
  }
  return out;
}

std::optional<double> OrderStream::next_event_time() const {
  double t = next_batch_;
  if (pick_process_) t = std::min({t, next_pick_, next_repl_});
  if (file_cursor_ < file_orders_.size()) t = std::min(t, file_orders_[file_cursor_].submit_time);
  if (!std::isfinite(t)) return std::nullopt;
  return t;
}

}  // namespace rmfs::scenario
