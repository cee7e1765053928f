#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rmfs/model.hpp"
#include "rmfs/rng.hpp"

namespace rmfs::scenario {

class ScenarioError : public std::runtime_error {
 public:
  enum class Kind { invalid_config, no_stock, malformed_order_file };
  ScenarioError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct Distribution {
  enum class Kind { constant, uniform, normal, gamma };
  Kind kind = Kind::constant;
  double a = 1.0;  ///< value | min | mean | shape
  double b = 0.0;  ///< -     | max | stddev | scale

  static Distribution constant(double v) { return {Kind::constant, v, 0.0}; }
  static Distribution uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
  static Distribution normal(double mean, double stddev) { return {Kind::normal, mean, stddev}; }
  static Distribution gamma(double shape, double scale) { return {Kind::gamma, shape, scale}; }

  double sample(Rng& rng) const;
  /// Rounded sample clamped to >= 1.
  int sample_count(Rng& rng) const;
  [[nodiscard]] double mean() const;
  void validate(const char* what) const;
};

struct RatePiece {
  double start = 0.0;        ///< s
  double rate_per_hour = 0;  ///< arrivals per hour from start on
};

/// Piecewise-constant rate function; the last piece extends to infinity.
class PiecewiseRate {
 public:
  PiecewiseRate() = default;
  explicit PiecewiseRate(std::vector<RatePiece> pieces);
  [[nodiscard]] double per_second(double t) const;
  [[nodiscard]] double supremum_per_second() const;
  [[nodiscard]] const std::vector<RatePiece>& pieces() const { return pieces_; }

 private:
  std::vector<RatePiece> pieces_;
};

/// Inhomogeneous Poisson arrivals by thinning against the rate supremum.
class ThinnedPoissonProcess {
 public:
  explicit ThinnedPoissonProcess(PiecewiseRate rate) : rate_(std::move(rate)) {}
  /// First arrival strictly after `from`; +infinity when the rate is zero.
  double next(double from, Rng& rng) const;

 private:
  PiecewiseRate rate_;
};

struct ConstantBacklog {
  int pick_backlog = 10;
  int replenishment_backlog = 4;
};

struct PoissonRegime {
  std::vector<RatePiece> pick_rate{{0.0, 60.0}};
  std::vector<RatePiece> replenishment_rate{{0.0, 20.0}};
};

struct FileRegime {
  std::filesystem::path path;
};

struct BatchSchedule {
  double period = 3600.0;  ///< s
  int pick_orders = 0;
  int replenishment_orders = 0;
};

struct ScenarioConfig {
  double duration = 3600.0;  ///< s
  int sku_count = 100;
  Distribution popularity = Distribution::gamma(2.0, 1.0);
  Distribution lines_per_order = Distribution::uniform(1.0, 2.0);
  Distribution units_per_line = Distribution::constant(1.0);
  Distribution unit_space = Distribution::constant(1.0);
  Distribution replenishment_order_size = Distribution::uniform(4.0, 10.0);
  double return_order_fraction = 0.0;
  double pause_high = 0.95;
  double pause_low = 0.50;
  std::variant<ConstantBacklog, PoissonRegime, FileRegime> regime = ConstantBacklog{};
  std::optional<BatchSchedule> batches;
  double initial_fill = 0.65;
  double position_sample_interval = 1.0;  ///< s
  double bucket = 3600.0;                 ///< s, time-series bucket width

  void validate() const;
};

ScenarioConfig scenario_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json scenario_config_to_json(const ScenarioConfig& config);
ScenarioConfig load_scenario_config(const std::filesystem::path& file);

std::vector<Sku> generate_sku_catalog(const ScenarioConfig& config, int n, Rng& rng);

/// Fills every pod to the configured fraction with SKUs drawn by popularity.
void seed_initial_inventory(World& world, double fill, Rng& rng);

/// Draws a pick order whose lines are covered by `available` (units per SKU
/// not yet promised to other orders). Throws no_stock when nothing is
/// available. The returned order carries no id.
PickOrder sample_pick_order(const ScenarioConfig& config, const std::vector<Sku>& catalog,
                            const std::vector<long>& available, double t, Rng& rng);

/// `max_space` caps the order's space so it fits an empty pod.
ReplenishmentOrder sample_replenishment_order(const ScenarioConfig& config, const std::vector<Sku>& catalog,
                                              double t, Rng& rng, double max_space = 1e300);

/// Draws an index proportionally to the weights of the eligible entries.
std::optional<std::size_t> draw_weighted(const std::vector<Sku>& catalog, const std::vector<bool>& eligible, Rng& rng);

struct OrderRecord {
  char type = 'P';
  double submit_time = 0.0;
  std::vector<std::pair<SkuId, int>> lines;
};

/// Parses `type(P|R), submit_time_s, sku:units[;sku:units...]` records.
std::vector<OrderRecord> parse_order_file(const std::filesystem::path& file);
std::vector<OrderRecord> parse_order_text(const std::string& text, const std::string& source = "<text>");

/// Snapshot of the world the order stream reacts to.
struct StreamView {
  double fill = 0.0;
  std::vector<long> available;  ///< per SKU, stock minus outstanding pick demand
  int open_pick_orders = 0;     ///< submitted, not completed
  int open_replenishment_orders = 0;  ///< submitted, not stored
};

struct Emission {
  double submit_time = 0.0;
  std::variant<PickOrder, ReplenishmentOrder> order;
};

/// Order generation regime with inventory-level pauses and optional batches.
class OrderStream {
 public:
  OrderStream(ScenarioConfig config, std::vector<Sku> catalog, double max_repl_space, std::uint64_t seed);

  /// Emits every order due at or before t given the current world view.
  std::vector<Emission> step(const StreamView& view, double t);
  /// Time of the next timed arrival or batch, if any.
  [[nodiscard]] std::optional<double> next_event_time() const;

  [[nodiscard]] bool picks_paused() const { return picks_paused_; }
  [[nodiscard]] bool replenishment_paused() const { return repl_paused_; }
  [[nodiscard]] long pick_arrivals() const { return pick_arrivals_; }
  [[nodiscard]] long replenishment_arrivals() const { return repl_arrivals_; }
  [[nodiscard]] long dropped_arrivals() const { return dropped_; }

 private:
  void update_pauses(double fill);
  bool emit_pick(std::vector<Emission>& out, std::vector<long>& available, double t);
  bool emit_replenishment(std::vector<Emission>& out, double t);

  ScenarioConfig config_;
  std::vector<Sku> catalog_;
  double max_repl_space_;
  Rng rng_;
  Rng arrival_rng_;
  bool picks_paused_ = false;
  bool repl_paused_ = false;
  std::optional<ThinnedPoissonProcess> pick_process_;
  std::optional<ThinnedPoissonProcess> repl_process_;
  double next_pick_ = 0.0;
  double next_repl_ = 0.0;
  std::vector<OrderRecord> file_orders_;
  std::size_t file_cursor_ = 0;
  double next_batch_ = 0.0;
  long pick_arrivals_ = 0;
  long repl_arrivals_ = 0;
  long dropped_ = 0;
};

}  // namespace rmfs::scenario
