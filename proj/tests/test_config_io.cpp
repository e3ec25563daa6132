#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "erosim/config.hpp"
#include "erosim/io.hpp"

using namespace erosim;
namespace fs = std::filesystem;

namespace {

int error_line(const std::string& yaml) {
  try {
    parse_config(yaml);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return 0;
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("erosim_io_" + std::to_string(std::random_device{}()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Durations

TEST(Duration, Units) {
  EXPECT_EQ(*parse_duration("3600"), 3600.0);
  EXPECT_EQ(*parse_duration("6h"), 21600.0);
  EXPECT_EQ(*parse_duration("180 d"), 180.0 * 86400.0);
  EXPECT_EQ(*parse_duration("1w"), 604800.0);
  EXPECT_EQ(*parse_duration("1y"), 365.0 * 86400.0);
  EXPECT_EQ(*parse_duration("2.5min"), 150.0);
  EXPECT_EQ(*parse_duration("0.1 s "), 0.1);
  EXPECT_FALSE(parse_duration("h").has_value());
  EXPECT_FALSE(parse_duration("3 fortnights").has_value());
  EXPECT_FALSE(parse_duration("inf").has_value());
}

// ---------------------------------------------------------------------------
// Configuration

TEST(Config, EmptyDocumentGivesDefaults) {
  const auto c = parse_config("");
  EXPECT_EQ(c.scenario.kind, ScenarioKind::standard_1d);
  EXPECT_EQ(c.scenario.N, 100);
  EXPECT_EQ(c.output.snapshot_times, default_snapshot_times());
  EXPECT_EQ(c.output.front_interval, 3600.0);
}

TEST(Config, DefaultsRoundTripBitExact) {
  for (auto kind : {ScenarioKind::standard_1d, ScenarioKind::standard_2d,
                    ScenarioKind::catastrophic_1d}) {
    const Config a = default_config(kind);
    const std::string text = emit_config(a);
    const Config b = parse_config(text);
    EXPECT_EQ(emit_config(b), text);
    EXPECT_EQ(b.scenario.kind, kind);
    EXPECT_EQ(b.scenario.dt, a.scenario.dt);
    EXPECT_EQ(b.scenario.ambient.E, a.scenario.ambient.E);
    EXPECT_EQ(b.scenario.params.asymmetric.K_s, a.scenario.params.asymmetric.K_s);
    EXPECT_EQ(b.scenario.params.law, a.scenario.params.law);
    EXPECT_EQ(b.solver.refactor_ratio, a.solver.refactor_ratio);
    EXPECT_EQ(b.output.front_interval, a.output.front_interval);
  }
}

TEST(Config, EditedValuesRoundTrip) {
  Config a = default_config(ScenarioKind::standard_1d);
  a.scenario.ambient.E = 0.1 + 0.2;  // not representable in short decimal
  a.scenario.ambient.schedule = {{3600.0, 0.002, 1e-7}, {7200.0, 1.0 / 3.0, 0.0}};
  a.scenario.params.K_c = std::nextafter(1.7e-3, 1.0);
  a.scenario.initial_geometry = InitialGeometry::exact;
  a.scenario.params.outside_porosity = OutsidePorosity::n_max;
  a.solver.refactor_ratio = 0.25;
  a.output.co2_eq = true;
  a.study.levels = 5;
  a.study.manufactured = true;
  const Config b = parse_config(emit_config(a));
  EXPECT_EQ(b.scenario.ambient.E, a.scenario.ambient.E);
  ASSERT_EQ(b.scenario.ambient.schedule.size(), 2u);
  EXPECT_EQ(b.scenario.ambient.schedule[1].E, 1.0 / 3.0);
  EXPECT_EQ(b.scenario.params.K_c, a.scenario.params.K_c);
  EXPECT_EQ(b.scenario.initial_geometry, InitialGeometry::exact);
  EXPECT_EQ(b.scenario.params.outside_porosity, OutsidePorosity::n_max);
  EXPECT_EQ(b.solver.refactor_ratio, 0.25);
  EXPECT_TRUE(b.output.co2_eq);
  EXPECT_EQ(b.study.levels, 5);
  EXPECT_TRUE(b.study.manufactured);
  EXPECT_EQ(emit_config(b), emit_config(a));
}

TEST(Config, PresetPlusOverrides) {
  const auto c = parse_config(R"(scenario:
  kind: catastrophic_1d
grid:
  N: 200
time:
  duration: 6h
  dt: 0.5
absorption:
  law: asymmetric
)");
  EXPECT_EQ(c.scenario.kind, ScenarioKind::catastrophic_1d);
  EXPECT_EQ(c.scenario.N, 200);
  EXPECT_EQ(c.scenario.duration, 21600.0);
  EXPECT_EQ(c.scenario.dt, 0.5);
  EXPECT_EQ(c.scenario.ambient.E, 0.0063);
  EXPECT_EQ(c.scenario.params.law, LawKind::asymmetric);
  EXPECT_EQ(c.output.front_interval, 0.0);
}

TEST(Config, HumidityAndSchedule) {
  const auto c = parse_config(R"(ambient:
  temperature: 25
  relative_humidity: 0.5
  C: 1e-6
  schedule:
    - {t: 1d, E: 0.003}
    - {t: 2d, temperature: 0, relative_humidity: 1}
)");
  EXPECT_NEAR(c.scenario.ambient.E, 0.5 * 2.309540625e-5, 1e-18);
  EXPECT_EQ(c.scenario.ambient.C, 1e-6);
  ASSERT_EQ(c.scenario.ambient.schedule.size(), 2u);
  EXPECT_EQ(c.scenario.ambient.schedule[0].t_start, 86400.0);
  EXPECT_EQ(c.scenario.ambient.schedule[0].E, 0.003);
  EXPECT_EQ(c.scenario.ambient.schedule[0].C, 1e-6);
  EXPECT_NEAR(c.scenario.ambient.schedule[1].E, 5.018e-6, 1e-20);
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_line("scenario:\n  kind: standard_1d\nbogus: 1\n"), 3);
  EXPECT_EQ(error_line("scenario:\n  kind: wet_3d\n"), 2);
  EXPECT_EQ(error_line("grid:\n  N: 100\n  M: 3\n"), 3);
  EXPECT_EQ(error_line("grid:\n  N: two\n"), 2);
  EXPECT_EQ(error_line("grid:\n  N: 2\n"), 2);
  EXPECT_EQ(error_line("time:\n  dt: 0\n"), 2);
  EXPECT_EQ(error_line("time:\n  dt: 5 parsecs\n"), 2);
  EXPECT_EQ(error_line("model:\n  n_tilde: 0.0063\n  n_max: 0.005\n"), 3);
  EXPECT_EQ(error_line("model:\n  K_c: -1\n"), 2);
  EXPECT_EQ(error_line("absorption:\n  law: cubic\n"), 2);
  EXPECT_EQ(error_line("ambient:\n  temperature: 25\n  relative_humidity: 1.5\n"), 3);
  EXPECT_EQ(error_line("ambient:\n  schedule:\n    - {t: 2d}\n    - {t: 1d}\n"), 4);
  EXPECT_EQ(error_line("study:\n  levels: 1\n"), 2);
  EXPECT_EQ(error_line("grid: [1, 2\n"), 2);
  EXPECT_EQ(error_line("sample:\n  lo: [-1, 0.75]\n"), 2);
}

TEST(Config, ErrorMessageNamesLine) {
  try {
    parse_config("grid:\n  N: 100\n  M: 3\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("'M'"), std::string::npos);
  }
}

TEST(Config, MissingFileIsIoError) {
  EXPECT_THROW(load_config("/nonexistent/erosim.yaml"), IoError);
}

// ---------------------------------------------------------------------------
// Files

TEST_F(TempDir, SnapshotRoundTrip1D) {
  const auto sc = make_scenario(ScenarioKind::standard_1d);
  auto st = sc.initial_state();
  st.t = 1.0 / 3.0;
  st.theta[50] = 0.1 + 0.2;
  write_snapshot(dir_ / "s.csv", sc.grid(), st);
  const auto snap = read_snapshot(dir_ / "s.csv");
  EXPECT_EQ(snap.dim, 1);
  EXPECT_EQ(snap.shape, 101);
  EXPECT_EQ(snap.t, st.t);
  EXPECT_EQ(snap.state.theta, st.theta);
  EXPECT_EQ(snap.state.c_a, st.c_a);
  EXPECT_EQ(snap.state.n, st.n);
  EXPECT_EQ(snap.coords[7][0], sc.grid().x(7));
  EXPECT_TRUE(snap.co2_eq.empty());
}

TEST_F(TempDir, SnapshotRoundTrip2DWithEquivalent) {
  ScenarioOverrides o;
  o.N = 10;
  const auto sc = make_scenario(ScenarioKind::standard_2d, o);
  const auto st = sc.initial_state();
  write_snapshot(dir_ / "s.csv", sc.grid(), st, 1.7e-3);
  const auto snap = read_snapshot(dir_ / "s.csv");
  EXPECT_EQ(snap.dim, 2);
  EXPECT_EQ(snap.coords.size(), 121u);
  EXPECT_EQ(snap.coords[12][1], sc.grid().y(1));
  EXPECT_EQ(snap.state.n, st.n);
  ASSERT_EQ(snap.co2_eq.size(), 121u);
  EXPECT_EQ(snap.co2_eq[0], st.c_a[0] / 1.7e-3);
}

TEST_F(TempDir, SnapshotRejectsDamage) {
  {
    std::ofstream(dir_ / "bad.csv") << "x,theta,c_a,n\n0,1,2,3\n";
  }
  EXPECT_THROW(read_snapshot(dir_ / "bad.csv"), IoError);
  {
    std::ofstream(dir_ / "short.csv") << "# dim=1 shape=3 t=0\nx,theta,c_a,n\n0,1,2,3\n";
  }
  EXPECT_THROW(read_snapshot(dir_ / "short.csv"), IoError);
  EXPECT_THROW(read_snapshot(dir_ / "missing.csv"), IoError);
  EXPECT_THROW(write_snapshot(dir_ / "no" / "such" / "dir.csv", Grid::covering(1, 0, 1, 4),
                              make_scenario(ScenarioKind::standard_1d).initial_state()),
               IoError);
}

TEST_F(TempDir, FrontLogRoundTrip) {
  const auto sc = make_scenario(ScenarioKind::standard_1d);
  FrontLog log;
  log.rays = monitor_rays(sc);
  log.record(0.0, {0.264279, 5.235721});
  log.record(3600.0, {0.2651, std::nullopt});
  write_front_log(dir_ / "front.csv", log);
  const auto back = read_front_log(dir_ / "front.csv", log.rays);
  ASSERT_EQ(back.samples.size(), 2u);
  EXPECT_EQ(back.rays[1].edge, 5.25);
  EXPECT_EQ(*back.samples[0].position[0], 0.264279);
  EXPECT_FALSE(back.samples[1].position[1].has_value());
  EXPECT_NEAR(*back.erosion(0, 1), 0.2651 - 0.25, 1e-15);
  EXPECT_TRUE(back.monotone());
}

TEST_F(TempDir, StudyTableRoundTrip) {
  std::vector<ConvergenceRow> rows(2);
  rows[0] = {100, 0.055, 1.0, 1e-5, std::nullopt, 2e-9, std::nullopt};
  rows[1] = {200, 0.0275, 0.5, 5e-6, 1.0, 1e-9, 1.0};
  write_study_table(dir_ / "study.csv", rows);
  const auto back = read_study_table(dir_ / "study.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].N, 200);
  EXPECT_EQ(back[1].dx, 0.0275);
  EXPECT_EQ(*back[0].err_theta, 1e-5);
  EXPECT_FALSE(back[0].order_theta.has_value());
  EXPECT_EQ(*back[1].order_c, 1.0);
}

TEST_F(TempDir, ManifestRoundTrip) {
  RunManifest m;
  m.command = "run";
  m.config_hash = hex64(fnv1a("abc"));
  m.scenario = "standard_1d";
  m.started = utc_timestamp(std::chrono::system_clock::time_point{});
  m.finished = m.started;
  m.status = "completed";
  m.files = {"config.yaml", "front.csv"};
  write_manifest(dir_ / "manifest.json", m);
  const auto b = read_manifest(dir_ / "manifest.json");
  EXPECT_EQ(b.to_json(), m.to_json());
  EXPECT_EQ(b.started, "1970-01-01T00:00:00Z");
  EXPECT_EQ(b.version, kVersion);
  { std::ofstream(dir_ / "broken.json") << "{\"command\": 1}"; }
  EXPECT_THROW(read_manifest(dir_ / "broken.json"), IoError);
}

TEST(Hash, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(hex64(fnv1a("foobar")), "85944171f73967e8");
}
