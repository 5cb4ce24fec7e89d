#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "frkd/csv.hpp"
#include "frkd/harness.hpp"

using namespace frkd;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FactorialConfig tiny_factorial() {
  FactorialConfig cfg;
  cfg.grid = {12, 12, 0, 1, 0, 1};
  cfg.cov = CovarianceSpec(1.0, 0.3);
  cfg.n_stations = 8;
  cfg.n_clusters = 2;
  cfg.proxy_nx = 3;
  cfg.proxy_ny = 3;
  cfg.n_x_levels = {3};
  cfg.snr_x_levels = {4.0};
  cfg.realizations = 2;
  cfg.noise_reps = 2;
  cfg.seed = 5;
  cfg.basis = {1, 3, false};
  cfg.em.max_iter = 20;
  return cfg;
}

}  // namespace

TEST_CASE("clustered station layout") {
  const Domain d(0, 1, 0, 1);
  const auto layout = station_layout_clustered(d, 50, 5, Rng(3));
  CHECK(layout.size() == 50);
  for (const auto& s : layout) CHECK(d.contains(s));

  const auto again = station_layout_clustered(d, 50, 5, Rng(3));
  for (std::size_t i = 0; i < layout.size(); ++i) {
    CHECK(layout[i].x == again[i].x);
    CHECK(layout[i].y == again[i].y);
  }

  const auto one = station_layout_clustered(d, 10, 1, Rng(4));
  CHECK(one.size() == 10);

  CHECK_THROWS_AS(station_layout_clustered(d, 50, 7, Rng(3)), std::invalid_argument);
}

TEST_CASE("factorial record layout and determinism") {
  FactorialConfig cfg = tiny_factorial();

  SUBCASE("one cell emits 4 records per strategy") {
    cfg.realizations = 1;
    cfg.noise_reps = 1;
    const ResultTable table = run_factorial(cfg);
    int adaptive = 0, random = 0;
    for (const auto& r : table) {
      CHECK(r.status == "ok");
      CHECK(r.b == 1);
      if (r.strategy == "adaptive") ++adaptive;
      if (r.strategy == "random") ++random;
    }
    CHECK(adaptive == 4);
    CHECK(random == 4);
  }

  SUBCASE("byte-identical results.csv on repeats") {
    const ResultTable a = run_factorial(cfg);
    const ResultTable b = run_factorial(cfg);
    const std::string pa = (fs::temp_directory_path() / "frkd_fact_a.csv").string();
    const std::string pb = (fs::temp_directory_path() / "frkd_fact_b.csv").string();
    write_results_csv(pa, a);
    write_results_csv(pb, b);
    CHECK(slurp(pa) == slurp(pb));
    fs::remove(pa);
    fs::remove(pb);
  }

  SUBCASE("noise-rep count does not perturb other streams") {
    const ResultTable small = run_factorial(cfg);
    FactorialConfig more = cfg;
    more.noise_reps = 4;
    const ResultTable big = run_factorial(more);
    // Records for noise_rep 0 agree exactly across the two runs.
    std::vector<ResultRecord> s0, b0;
    for (const auto& r : small) {
      if (r.noise_rep == 0) s0.push_back(r);
    }
    for (const auto& r : big) {
      if (r.noise_rep == 0) b0.push_back(r);
    }
    REQUIRE(s0.size() == b0.size());
    for (std::size_t i = 0; i < s0.size(); ++i) {
      CHECK(s0[i].strategy == b0[i].strategy);
      CHECK(s0[i].metric == b0[i].metric);
      CHECK(s0[i].value == b0[i].value);
    }
  }

  SUBCASE("csv round trip") {
    const ResultTable a = run_factorial(cfg);
    const std::string p = (fs::temp_directory_path() / "frkd_fact_rt.csv").string();
    write_results_csv(p, a);
    const ResultTable back = read_results_csv(p);
    REQUIRE(back.size() == a.size());
    CHECK(back[3].metric == a[3].metric);
    CHECK(back[3].value == doctest::Approx(a[3].value).epsilon(1e-11));
    fs::remove(p);
  }
}

TEST_CASE("difference summaries") {
  SUBCASE("identical strategies mean zero differences") {
    ResultTable table;
    for (int m1 = 0; m1 < 3; ++m1) {
      for (int m2 = 0; m2 < 2; ++m2) {
        for (const char* strat : {"adaptive", "random"}) {
          table.push_back({m1, m2, strat, 10, 1.0, 1, "rmspe", 0.5 + m1 + 0.1 * m2, "ok"});
        }
      }
    }
    const auto rows = summarize_differences(table);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].mean_diff == 0.0);
    CHECK(rows[0].q25 == 0.0);
    CHECK(rows[0].q75 == 0.0);
    CHECK(rows[0].n_pairs == 6);
  }

  SUBCASE("hand-computed values") {
    // diffs: (random - adaptive) = {0.1, 0.3, -0.1, 0.5}
    ResultTable table;
    const double adaptive_vals[] = {1.0, 1.0, 1.0, 1.0};
    const double random_vals[] = {1.1, 1.3, 0.9, 1.5};
    for (int i = 0; i < 4; ++i) {
      table.push_back({i, 0, "adaptive", 10, 1.0, 1, "mape", adaptive_vals[i], "ok"});
      table.push_back({i, 0, "random", 10, 1.0, 1, "mape", random_vals[i], "ok"});
    }
    const auto rows = summarize_differences(table);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].mean_diff == doctest::Approx(0.2).epsilon(1e-12));
    // sorted diffs: -0.1, 0.1, 0.3, 0.5 -> type-7 quartiles 0.05 and 0.35
    CHECK(rows[0].q25 == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(rows[0].q75 == doctest::Approx(0.35).epsilon(1e-12));
  }

  SUBCASE("row count is conditions x metrics") {
    const FactorialConfig cfg = tiny_factorial();
    const auto rows = summarize_differences(run_factorial(cfg));
    CHECK(rows.size() == cfg.n_x_levels.size() * cfg.snr_x_levels.size() * 4);
  }

  SUBCASE("unpaired cells raise") {
    ResultTable table;
    table.push_back({0, 0, "adaptive", 10, 1.0, 1, "mape", 1.0, "ok"});
    CHECK_THROWS_AS(summarize_differences(table), std::invalid_argument);
  }

  SUBCASE("failed cells are excluded, not errors") {
    ResultTable table;
    table.push_back({0, 0, "adaptive", 10, 1.0, 1, "mape", 1.0, "ok"});
    table.push_back({0, 0, "random", 10, 1.0, 1, "mape", 1.2, "ok"});
    table.push_back({1, 0, "adaptive", 10, 1.0, 1, "mape",
                     std::numeric_limits<double>::quiet_NaN(), "em diverged"});
    table.push_back({1, 0, "random", 10, 1.0, 1, "mape",
                     std::numeric_limits<double>::quiet_NaN(), "em diverged"});
    const auto rows = summarize_differences(table);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].n_pairs == 1);
    CHECK(rows[0].mean_diff == doctest::Approx(0.2));
  }
}

TEST_CASE("batch study rows") {
  BatchStudyConfig cfg;
  cfg.grid = {12, 12, 0, 1, 0, 1};
  cfg.cov = CovarianceSpec(1.0, 0.3);
  cfg.n_stations = 8;
  cfg.n_clusters = 2;
  cfg.proxy_nx = 3;
  cfg.proxy_ny = 3;
  cfg.n_x_levels = {2, 4};
  cfg.batch_levels = {1, 4};
  cfg.realizations = 1;
  cfg.seed = 6;
  cfg.basis = {1, 3, false};
  cfg.em.max_iter = 20;

  const auto rows = run_batch_study(cfg);
  REQUIRE(rows.size() == 3);  // (2,1), (4,1), (4,4)
  for (const auto& r : rows) {
    CHECK(r.mean_pred_variance > 0.0);
    CHECK(r.rmspe > 0.0);
  }
  // More sensors at b = 1 leaves less variance.
  double var2 = 0, var4 = 0;
  for (const auto& r : rows) {
    if (r.b == 1 && r.n_x == 2) var2 = r.mean_pred_variance;
    if (r.b == 1 && r.n_x == 4) var4 = r.mean_pred_variance;
  }
  CHECK(var4 < var2);
}

TEST_CASE("micro OSSE end to end") {
  const std::string dir = (fs::temp_directory_path() / "frkd_micro_osse").string();
  fs::create_directories(dir);

  // 20 x 16 km grid, 4 km blocks (5 x 4), mask cutting one corner.
  const GridConfig gc{20, 16, 0, 20, 0, 16};
  const BauGrid grid = gc.grid();
  std::vector<std::vector<std::string>> mask_rows;
  std::vector<std::uint8_t> mask(grid.size(), 0);
  for (int i = 0; i < grid.size(); ++i) {
    const Location c = grid.centroid(i);
    if (c.x + c.y <= 30.0) {
      mask[i] = 1;
      mask_rows.push_back({std::to_string(i), "1"});
    }
  }
  write_csv(dir + "/mask.csv", {"bau_index", "value"}, mask_rows);

  write_csv(dir + "/stations.csv", {"x", "y"},
            {{"2.5", "2.5"}, {"5.5", "3.5"}, {"3.5", "6.5"}});

  const BlockPartition blocks = nest_blocks(grid, 5, 4, mask);
  // Proxy points at the centroids of the (kept) coarse cells.
  {
    std::vector<std::vector<std::string>> rows;
    const BlockPartition full = nest_blocks(grid, 5, 4);
    for (int by = 0, j = 0; by < 4; ++by) {
      for (int bx = 0; bx < 5; ++bx, ++j) {
        bool any = false;
        for (int i : full.blocks[j]) {
          if (mask[i]) any = true;
        }
        if (any) {
          rows.push_back({format_number(2.0 + 4.0 * bx), format_number(2.0 + 4.0 * by),
                          format_number(5.0 + 0.1 * bx - 0.05 * by)});
        }
      }
    }
    write_csv(dir + "/cmaq.csv", {"x", "y", "value"}, rows);
  }
  {
    std::vector<double> sds(blocks.n_blocks(), 0.5);
    write_block_values(dir + "/block_sds.csv", sds, "sd");
  }
  {
    std::vector<std::vector<std::string>> r1, r2;
    for (int i = 0; i < grid.size(); ++i) {
      if (!mask[i]) continue;
      const Location c = grid.centroid(i);
      if (c.x >= 8.0 && c.x <= 18.0) r1.push_back({std::to_string(i), "1"});
      if (c.y >= 4.0 && c.y <= 12.0) r2.push_back({std::to_string(i), "1"});
    }
    write_csv(dir + "/risk1.csv", {"bau_index", "value"}, r1);
    write_csv(dir + "/risk2.csv", {"bau_index", "value"}, r2);
  }

  OsseConfig cfg;
  cfg.grid = gc;
  cfg.cov = CovarianceSpec(0.8, 8.0);
  cfg.coarse_nx = 5;
  cfg.coarse_ny = 4;
  cfg.mask_file = dir + "/mask.csv";
  cfg.station_file = dir + "/stations.csv";
  cfg.proxy_point_file = dir + "/cmaq.csv";
  cfg.block_sd_file = dir + "/block_sds.csv";
  cfg.risk1_file = dir + "/risk1.csv";
  cfg.risk2_file = dir + "/risk2.csv";
  cfg.snr_z = 7.0;
  cfg.snr_x = 4.0;
  cfg.n_sensors = 4;
  cfg.batch_size = 1;
  cfg.min_spacing = 2.0;
  cfg.lambda = 1.0;
  cfg.scope = SpacingScope::Global;
  cfg.noise_draws = 5;
  cfg.seed = 12;
  cfg.basis = {1, 3, false};
  cfg.em.max_iter = 25;

  const OsseReport report = run_osse(cfg, dir + "/out");

  CHECK(report.process.count == static_cast<int>(mask_rows.size()));
  CHECK(report.stations.count == 3);
  CHECK(report.proxy.count == blocks.n_blocks());
  CHECK(report.sites.size() == 4);
  CHECK(report.sites_all_risk);
  CHECK(report.min_site_spacing >= 2.0);
  CHECK(report.post_mean_sd_sensors < report.pre_mean_sd_sensors);
  CHECK(report.with_x.size() == 5);

  for (const char* f : {"/out/summary.json", "/out/design.json", "/out/results.csv",
                        "/out/sites.csv", "/out/surfaces/truth.csv",
                        "/out/surfaces/fit_zq.csv", "/out/surfaces/fit_all.csv",
                        "/out/surfaces/error.csv"}) {
    CHECK(fs::exists(dir + f));
  }
  fs::remove_all(dir);
}
