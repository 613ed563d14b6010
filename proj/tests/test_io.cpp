#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"
#include "thermident/csv.hpp"
#include "thermident/error.hpp"
#include "thermident/model_artifact.hpp"

namespace thermident {
namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalid;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

bool same_with_nan(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.array() == b.array() || (a.array().isNaN() && b.array().isNaN())).all();
}

TEST(Csv, CommentsAndMissingFields) {
  const auto path = testing::scratch_dir("csv") / "t.csv";
  write_file(path, "# produced by hand\n# second\na,b\n1,\n2.5,nan\n");
  const auto t = read_csv(path);
  EXPECT_EQ(t.comments.size(), 2u);
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(t.column("b"), 1u);
  EXPECT_FALSE(t.has_column("c"));
  EXPECT_EQ(code_of([&] { (void)t.column("c"); }), ErrorCode::kIo);
  EXPECT_TRUE(std::isnan(parse_field(t.rows[0][1])));
  EXPECT_TRUE(std::isnan(parse_field(t.rows[1][1])));
  EXPECT_EQ(parse_field(t.rows[1][0]), 2.5);

  write_csv(path, t);
  const auto again = read_csv(path);
  EXPECT_EQ(again.comments, t.comments);
  EXPECT_EQ(again.rows, t.rows);
}

TEST(Csv, RaggedRowsAreRejected) {
  const auto path = testing::scratch_dir("csv") / "ragged.csv";
  write_file(path, "a,b\n1,2,3\n");
  EXPECT_EQ(code_of([&] { read_csv(path); }), ErrorCode::kIo);
  EXPECT_EQ(code_of([&] { read_csv(path.parent_path() / "absent.csv"); }), ErrorCode::kIo);
}

TEST(Dataset, CsvRoundTripIsExact) {
  auto ds = testing::twin_weekend(1);
  ds.y(2, 40) = std::numeric_limits<double>::quiet_NaN();
  ds.y(0, 41) += 1.0 / 3.0;
  const auto path = testing::scratch_dir("dataset") / "weekend.csv";
  save_dataset_csv(path, ds);
  EXPECT_TRUE(std::filesystem::exists(truth_path_for(path)));
  const auto back = load_dataset_csv(path);
  EXPECT_EQ(back.timestamps, ds.timestamps);
  EXPECT_EQ(back.zone_ids, ds.zone_ids);
  EXPECT_EQ(back.box_ids, ds.box_ids);
  EXPECT_TRUE(same_with_nan(back.y, ds.y));
  EXPECT_EQ(back.u, ds.u);
  EXPECT_EQ(back.v, ds.v);
  ASSERT_TRUE(back.true_x && back.true_f_ig);
  EXPECT_EQ(*back.true_x, *ds.true_x);
  EXPECT_EQ(back.state_labels, ds.state_labels);
}

TEST(Dataset, IrregularGridIsRejected) {
  auto ds = testing::twin_weekend(0);
  ds.timestamps[10] += 60;
  EXPECT_EQ(code_of([&] { ds.validate(); }), ErrorCode::kInvalid);
}

TEST(Dataset, SliceAndConcatenateAreInverse) {
  const auto ds = testing::twin_weekend(0);
  const auto joined = concatenate({ds.slice(0, 100), ds.slice(100, ds.size())});
  EXPECT_EQ(joined.y, ds.y);
  EXPECT_EQ(joined.timestamps, ds.timestamps);
  EXPECT_EQ(*joined.true_x, *ds.true_x);
  EXPECT_THROW(concatenate({ds.slice(100, 200), ds.slice(0, 100)}), Error);
}

TEST(Schedule, CsvRoundTrip) {
  ExcitationOptions o;
  o.start = testing::utc(2024, 3, 9);
  const auto s = generate_excitation(testing::twin_building(), 21, 2, o);
  const auto path = testing::scratch_dir("schedule") / "s.csv";
  save_schedule_csv(path, s);
  const auto back = load_schedule_csv(path);
  EXPECT_EQ(back.timestamps, s.timestamps);
  EXPECT_EQ(back.box_ids, s.box_ids);
  EXPECT_EQ(back.u, s.u);
  ASSERT_EQ(back.blocks.size(), s.blocks.size());
  for (std::size_t i = 0; i < s.blocks.size(); ++i) {
    EXPECT_EQ(back.blocks[i].zone, s.blocks[i].zone);
    EXPECT_EQ(back.blocks[i].begin, s.blocks[i].begin);
    EXPECT_EQ(back.blocks[i].end, s.blocks[i].end);
  }
}

TEST(Building, DumpParseRoundTrip) {
  const auto& desc = testing::twin_building();
  const std::string text = dump_building(desc);
  EXPECT_EQ(dump_building(parse_building(text)), text);
}

TEST(Building, MissingAdjacencyNamesTheLine) {
  std::string text = read_file(testing::data_dir() / "twin" / "building.json");
  // Drop the first zone's adjacency list.
  const auto begin = text.find("\"adjacent\"");
  const auto end = text.find(']', begin);
  ASSERT_NE(begin, std::string::npos);
  text.erase(begin, end - begin + 1);
  // Fix up the trailing comma left after floor_area.
  const auto comma = text.rfind(',', begin);
  text.erase(comma, 1);
  const std::string msg = message_of([&] { parse_building(text, "building.json"); });
  EXPECT_EQ(code_of([&] { parse_building(text, "building.json"); }), ErrorCode::kSchema);
  EXPECT_NE(msg.find("building.json:5:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("/zones/0"), std::string::npos) << msg;
  EXPECT_NE(msg.find("adjacent"), std::string::npos) << msg;
}

TEST(Building, SyntaxErrorsCarryALine) {
  const std::string msg = message_of([] { parse_building("{\n  \"schema\": \n}\n", "b.json"); });
  EXPECT_NE(msg.find("b.json:"), std::string::npos) << msg;
}

TEST(Parameters, DumpParseRoundTrip) {
  const auto& desc = testing::twin_building();
  const auto& p = testing::twin_params();
  const auto q = parse_parameters(dump_parameters(p, desc), desc);
  EXPECT_EQ(q.to_vector(), p.to_vector());
  EXPECT_EQ(parameter_names(desc).size(), 13u);
  EXPECT_EQ(parameter_names(desc)[7], "c_IG[NW]");
}

TEST(Parameters, UnknownZoneIsASchemaError) {
  std::string text = read_file(testing::data_dir() / "twin" / "params.json");
  text.replace(text.find("\"NW\""), 4, "\"XX\"");
  EXPECT_EQ(code_of([&] { parse_parameters(text, testing::twin_building()); }), ErrorCode::kSchema);
}

TEST(RunConfig, TwinConfigParses) {
  const auto& c = testing::twin_config();
  EXPECT_EQ(c.dt, 900.0);
  EXPECT_EQ(c.noise.r, 4e-4);
  EXPECT_EQ(c.warmup_steps, 96);
  EXPECT_EQ(c.max_iterations, 60);
  EXPECT_EQ(c.excitation.weekends, 2);
  EXPECT_EQ(c.excitation.first_day, testing::utc(2024, 3, 9));
  EXPECT_EQ(c.operation.start, testing::utc(2024, 1, 1));
  EXPECT_EQ(c.operation.zone_peak.at("NW"), 18.0);
  EXPECT_EQ(c.cadence, Cadence::kAnchored);
  EXPECT_EQ(c.hash.size(), 16u);
  EXPECT_EQ(c.building, testing::data_dir() / "twin" / "building.json");
}

TEST(RunConfig, HashIgnoresFormattingButNotContent) {
  const auto dir = testing::data_dir() / "twin";
  const std::string text = read_file(dir / "run.json");
  const auto a = parse_run_config(text, dir);
  std::string spaced = text;
  for (std::size_t at = spaced.find(": "); at != std::string::npos; at = spaced.find(": ", at + 3)) {
    spaced.replace(at, 2, ":   ");
  }
  EXPECT_EQ(parse_run_config(spaced, dir).hash, a.hash);
  const auto b = parse_run_config(text, dir, {{"/seeds/synthesis", "11"}});
  EXPECT_NE(b.hash, a.hash);
  EXPECT_EQ(b.synthesis_seed, 11u);
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(RunConfig, OverridesTakeJsonOrStrings) {
  const auto dir = testing::data_dir() / "twin";
  const auto c = parse_run_config(read_file(dir / "run.json"), dir,
                                  {{"/prediction/cadence", "sliding"}, {"/kalman/r", "0.01"},
                                   {"/optimizer/bounds", R"({"gamma_EW": [1, 20]})"}});
  EXPECT_EQ(c.cadence, Cadence::kSliding);
  EXPECT_EQ(c.noise.r, 0.01);
  const auto b = c.bounds(testing::twin_building());
  EXPECT_EQ(b.lower[0], 1.0);
  EXPECT_EQ(b.upper[0], 20.0);
}

TEST(RunConfig, MissingInputPathIsAConfigError) {
  const auto dir = testing::data_dir() / "twin";
  const std::string text = read_file(dir / "run.json");
  const auto c = [&] { parse_run_config(text, dir, {{"/paths/building", "nowhere.json"}}); };
  EXPECT_EQ(code_of(c), ErrorCode::kConfig);
  EXPECT_NE(message_of(c).find("nowhere.json"), std::string::npos);
  EXPECT_EQ(code_of([] { load_run_config("/nonexistent/run.json"); }), ErrorCode::kConfig);
}

TEST(RunConfig, BadValuesAreSchemaErrors) {
  const auto dir = testing::data_dir() / "twin";
  const std::string text = read_file(dir / "run.json");
  EXPECT_EQ(code_of([&] { parse_run_config(text, dir, {{"/dt", "700"}}); }), ErrorCode::kSchema);
  EXPECT_EQ(code_of([&] { parse_run_config(text, dir, {{"/kalman/r", "-1"}}); }), ErrorCode::kSchema);
  EXPECT_EQ(code_of([&] { parse_run_config(text, dir, {{"/schema", "\"other/1\""}}); }), ErrorCode::kSchema);
}

TEST(Artifact, JsonRoundTrip) {
  const auto& desc = testing::twin_building();
  const auto m = build_model(desc, testing::twin_params());
  const auto dm = discretize(m);
  auto a = make_artifact(desc, m, dm);
  a.metadata["config_hash"] = "feedfacefeedface";
  const auto path = testing::scratch_dir("artifact") / "model.json";
  save_artifact(path, a);
  const auto b = load_artifact(path);
  EXPECT_EQ(b.state_labels, a.state_labels);
  EXPECT_EQ(b.zone_ids, a.zone_ids);
  EXPECT_EQ(b.parameters, a.parameters);
  EXPECT_EQ(b.capacitance, a.capacitance);
  EXPECT_EQ(b.continuous.A, m.A);
  EXPECT_EQ(b.discrete.A, dm.A);
  EXPECT_EQ(b.discrete.B_ig, dm.B_ig);
  ASSERT_EQ(b.discrete.B_xu.size(), dm.B_xu.size());
  EXPECT_EQ(b.discrete.B_xu[3], dm.B_xu[3]);
  EXPECT_EQ(b.discrete.C, dm.C);
  EXPECT_EQ(b.metadata, a.metadata);
  EXPECT_EQ(artifact_to_json(b), artifact_to_json(a));
}

}  // namespace
}  // namespace thermident
