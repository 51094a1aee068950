#include <gtest/gtest.h>

#include "fleetsim/config.h"
#include "fleetsim/csv.h"
#include "fleetsim/evaluation.h"
#include "fleetsim/records.h"
#include "test_support.h"

using namespace fleetsim;
using namespace fleetsim::testing;

namespace {

std::map<std::string, std::string> base_constants() {
  return {{"network_nodes", "nodes.csv"},
          {"network_edges", "edges.csv"},
          {"demand_file", "demand.csv"},
          {"op_fleet_size", "380"},
          {"end_time", "7200"}};
}

}  // namespace

TEST(Config, ConstantsOnlyGiveOneScenario) {
  auto cfgs = parse_config(base_constants(), {});
  ASSERT_EQ(cfgs.size(), 1u);
  EXPECT_EQ(cfgs[0].operators.at(0).fleet_size, 380);
  EXPECT_EQ(cfgs[0].sim_flow, SimFlow::ids);
  EXPECT_DOUBLE_EQ(cfgs[0].operators[0].max_wait, 360.0);
}

TEST(Config, ScenarioRowOverridesConstant) {
  auto cfgs = parse_config(base_constants(), {{{"scenario_name", "small"}, {"op_fleet_size", "100"}},
                                              {{"scenario_name", "bos"}, {"sim_flow", "bos"}}});
  ASSERT_EQ(cfgs.size(), 2u);
  EXPECT_EQ(cfgs[0].scenario_name, "small");
  EXPECT_EQ(cfgs[0].operators[0].fleet_size, 100);
  EXPECT_EQ(cfgs[1].operators[0].fleet_size, 380);
  EXPECT_EQ(cfgs[1].sim_flow, SimFlow::bos);
}

TEST(Config, TypeErrorsNameTheKey) {
  auto c = base_constants();
  c["op_fleet_size"] = "many";
  try {
    parse_config(c, {});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("op_fleet_size"), std::string::npos);
  }
  c = base_constants();
  c["no_such_key"] = "1";
  EXPECT_THROW(parse_config(c, {}), ConfigError);
}

TEST(Config, BatchPeriodMustBeAMultipleOfTheStep) {
  auto c = base_constants();
  c["op_batch_period"] = "90";
  EXPECT_THROW(parse_config(c, {}), ConfigError);
  c["op_batch_period"] = "120";
  EXPECT_NO_THROW(parse_config(c, {}));
}

TEST(Config, PerOperatorValues) {
  auto c = base_constants();
  c["n_operators"] = "2";
  c["op_fleet_size"] = "10;20";
  c["op_max_wait"] = "300";
  auto cfgs = parse_config(c, {});
  ASSERT_EQ(cfgs[0].operators.size(), 2u);
  EXPECT_EQ(cfgs[0].operators[1].fleet_size, 20);
  EXPECT_DOUBLE_EQ(cfgs[0].operators[1].max_wait, 300.0);
  EXPECT_EQ(cfgs[0].operators[1].id, 1);
  c["op_fleet_size"] = "1;2;3";
  EXPECT_THROW(parse_config(c, {}), ConfigError);
}

TEST(Config, FilesResolveAgainstTheirDirectory) {
  TempDir dir;
  std::filesystem::create_directories(dir / "cfg");
  write_file(dir / "cfg" / "constants.csv", "key,value\nnetwork_nodes,n.csv\nnetwork_edges,e.csv\ndemand_file,d.csv\n");
  write_file(dir / "cfg" / "scenarios.csv", "scenario_name,op_fleet_size\na,5\nb,6\n");
  auto cfgs = parse_config(dir / "cfg" / "constants.csv", dir / "cfg" / "scenarios.csv");
  ASSERT_EQ(cfgs.size(), 2u);
  EXPECT_EQ(cfgs[0].nodes_file, dir / "cfg" / "n.csv");
  EXPECT_EQ(cfgs[1].operators[0].fleet_size, 6);
  write_file(dir / "dup.csv", "key,value\nend_time,1\nend_time,2\n");
  EXPECT_THROW(parse_config(dir / "dup.csv", std::nullopt), ConfigError);
}

TEST(Records, UserStreamHeader) {
  TempDir dir;
  {
    RecordWriter w(dir.path());
    w.close();
  }
  const auto text = read_file(dir / kUserStatsFile);
  EXPECT_EQ(text, user_stats_header() + "\n");
  EXPECT_EQ(user_stats_header().substr(0, 24), "request_id,request_time,");
}

TEST(Records, OneRowPerLeg) {
  TempDir dir;
  {
    RecordWriter w(dir.path());
    LegRecord r;
    r.kind = LegKind::drive;
    r.end_time = 10.0;
    r.distance = 100.0;
    w.leg(r, 4);
    r.kind = LegKind::board;
    w.leg(r, 4);
    TimeStatsRow t;
    t.time = 60.0;
    w.time(t);
    ComputeTimesRow c;
    c.time = 60.0;
    c.update = 0.25;
    w.compute(c);
  }
  auto legs = csv::Table::read(dir / kOpStatsFile);
  EXPECT_EQ(legs.rows(), 2u);
  EXPECT_EQ(legs.get(1, "kind").value_or(""), "board");
  auto ct = csv::Table::read(dir / kComputeTimesFile);
  EXPECT_DOUBLE_EQ(ct.get_double(0, "update_s"), 0.25);
}

TEST(Evaluation, Percentile) {
  EXPECT_DOUBLE_EQ(percentile({}, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(percentile({4.0, 1.0, 3.0, 2.0}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(percentile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.9), 4.6);
}

TEST(Evaluation, MicroScenarioKpis) {
  TempDir dir;
  const std::string h = user_stats_header();
  write_file(dir / kUserStatsFile,
             h + "\n"
                 "1,0,0,2,1,,basic,finished,0,0,30,100,0,0,0,30,0,160,2,100,1000\n"
                 "2,10,1,2,1,,basic,finished,0,0,90,50,0,0,1,100,1,200,2,50,500\n"
                 "3,20,1,2,1,,basic,rejected_by_operator,0,,,,,,,,,,,50,500\n");
  write_file(dir / kOpStatsFile,
             op_stats_header() +
                 "\n"
                 "0,0,drive,0,100,0,2,1000,,,0,,1,1,1,4,0\n"
                 "0,1,drive,0,50,0,1,500,,,0,,1,1,0,4,0\n"
                 "0,1,board,50,60,1,1,0,,1,0,,1,1,0,4,0\n"
                 "0,0,board,100,130,2,2,0,,1,0,,1,1,0,4,0\n");
  auto k = evaluate(dir.path());
  EXPECT_EQ(k.total_requests, 3);
  EXPECT_EQ(k.served, 2);
  EXPECT_EQ(k.rejected, 1);
  EXPECT_NEAR(k.served_fraction, 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(k.fleet_vkm, 1.5);
  EXPECT_DOUBLE_EQ(k.empty_vkm, 0.5);
  EXPECT_EQ(k.completed_dropoffs, 2);
  EXPECT_DOUBLE_EQ(k.mean_waiting, (30.0 + 90.0) / 2.0);
  EXPECT_DOUBLE_EQ(k.max_waiting, 90.0);
  EXPECT_DOUBLE_EQ(k.mean_detour_ratio, (130.0 / 100.0 + 100.0 / 50.0) / 2.0);
  EXPECT_NEAR(k.mean_occupancy, 1000.0 / 1500.0, 1e-12);
  ASSERT_EQ(k.waiting_histogram_60s.size(), 2u);
  EXPECT_EQ(k.waiting_histogram_60s[0], (Bin<int>{0.0, 1}));
  EXPECT_EQ(k.waiting_histogram_60s[1], (Bin<int>{60.0, 1}));
  ASSERT_EQ(k.unserved_per_15min.size(), 1u);
  EXPECT_EQ(k.unserved_per_15min[0].value, 1);
  write_standard_eval(k, dir.path());
  auto table = csv::Table::read(dir / kStandardEvalFile);
  EXPECT_EQ(table.get(0, "metric").value_or(""), "total_requests");
}

TEST(Evaluation, NonTerminalStateIsAnError) {
  TempDir dir;
  write_file(dir / kUserStatsFile,
             user_stats_header() + "\n1,0,0,2,1,,basic,booked,0,0,30,100,0,0,0,,,,,100,1000\n");
  write_file(dir / kOpStatsFile, op_stats_header() + "\n");
  EXPECT_THROW(evaluate(dir.path()), ConsistencyError);
}
