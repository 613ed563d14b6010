#include "thermident/model_artifact.hpp"

#include <fstream>
#include <sstream>

#include "thermident/error.hpp"
#include "thermident/json_doc.hpp"
#include "thermident/parameters.hpp"

namespace thermident {
namespace {

using json = nlohmann::json;
using pointer = json::json_pointer;

json sparse(const Eigen::MatrixXd& m) {
  json entries = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) != 0.0) entries.push_back({i, j, m(i, j)});
    }
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", entries}};
}

Eigen::MatrixXd dense(const JsonDocument& doc, const pointer& p) {
  const auto rows = doc.integer(p / "rows");
  const auto cols = doc.integer(p / "cols");
  if (rows < 0 || cols < 0) doc.fail(p, "negative matrix size");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
  const auto& entries = doc.array(p / "entries");
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const pointer e = p / "entries" / k;
    const auto i = doc.integer(e / 0);
    const auto j = doc.integer(e / 1);
    if (i < 0 || i >= rows || j < 0 || j >= cols) doc.fail(e, "index outside the matrix");
    m(i, j) = doc.number(e / 2);
  }
  return m;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from(const JsonDocument& doc, const pointer& p) {
  const auto& arr = doc.array(p);
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = doc.number(p / i);
  return v;
}

json matrices_json(const ModelArtifact::Matrices& m) {
  json j;
  j["A"] = sparse(m.A);
  j["B_v"] = sparse(m.B_v);
  j["B_ig"] = sparse(m.B_ig);
  j["C"] = sparse(m.C);
  j["B_xu"] = json::array();
  j["B_vu"] = json::array();
  for (const auto& b : m.B_xu) j["B_xu"].push_back(sparse(b));
  for (const auto& b : m.B_vu) j["B_vu"].push_back(sparse(b));
  return j;
}

ModelArtifact::Matrices matrices_from(const JsonDocument& doc, const pointer& p) {
  ModelArtifact::Matrices m;
  m.A = dense(doc, p / "A");
  m.B_v = dense(doc, p / "B_v");
  m.B_ig = dense(doc, p / "B_ig");
  m.C = dense(doc, p / "C");
  for (std::size_t i = 0; i < doc.array(p / "B_xu").size(); ++i) m.B_xu.push_back(dense(doc, p / "B_xu" / i));
  for (std::size_t i = 0; i < doc.array(p / "B_vu").size(); ++i) m.B_vu.push_back(dense(doc, p / "B_vu" / i));
  return m;
}

}  // namespace

ModelArtifact make_artifact(const BuildingDescription& desc, const RCStateSpaceModel& model, const DiscreteModel& dm) {
  ModelArtifact a;
  a.state_labels = model.layout.state_labels;
  a.zone_ids = model.layout.zone_ids;
  a.box_ids = model.layout.box_ids;
  a.parameter_names = parameter_names(desc);
  a.parameters = model.params.to_vector();
  a.capacitance = model.layout.capacitance;
  a.dt = dm.dt;
  a.continuous = {model.A, model.B_v, model.B_ig, model.B_xu, model.B_vu, model.C};
  a.discrete = {dm.A, dm.B_v, dm.B_ig, dm.B_xu, dm.B_vu, dm.C};
  a.c_ig = dm.c_ig;
  return a;
}

std::string artifact_to_json(const ModelArtifact& a) {
  json j;
  j["schema"] = kModelSchema;
  j["dt"] = a.dt;
  j["state_labels"] = a.state_labels;
  j["zone_ids"] = a.zone_ids;
  j["box_ids"] = a.box_ids;
  json params = json::object();
  for (std::size_t i = 0; i < a.parameter_names.size(); ++i) {
    params[a.parameter_names[i]] = a.parameters[static_cast<Eigen::Index>(i)];
  }
  j["parameter_names"] = a.parameter_names;
  j["parameter_values"] = params;
  j["parameters"] = vector_json(a.parameters);
  j["capacitance"] = vector_json(a.capacitance);
  j["c_ig"] = vector_json(a.c_ig);
  j["continuous"] = matrices_json(a.continuous);
  j["discrete"] = matrices_json(a.discrete);
  j["metadata"] = a.metadata;
  return j.dump(1) + "\n";
}

ModelArtifact artifact_from_json(std::string_view text, std::string_view source_name) {
  const JsonDocument doc{std::string(text), std::string(source_name)};
  doc.expect_schema(kModelSchema);
  ModelArtifact a;
  a.dt = doc.positive(pointer("/dt"));
  a.state_labels = doc.strings(pointer("/state_labels"));
  a.zone_ids = doc.strings(pointer("/zone_ids"));
  a.box_ids = doc.strings(pointer("/box_ids"));
  a.parameter_names = doc.strings(pointer("/parameter_names"));
  a.parameters = vector_from(doc, pointer("/parameters"));
  a.capacitance = vector_from(doc, pointer("/capacitance"));
  a.c_ig = vector_from(doc, pointer("/c_ig"));
  a.continuous = matrices_from(doc, pointer("/continuous"));
  a.discrete = matrices_from(doc, pointer("/discrete"));
  const auto n = static_cast<Eigen::Index>(a.state_labels.size());
  for (const auto* m : {&a.continuous, &a.discrete}) {
    if (m->A.rows() != n || m->A.cols() != n || m->C.cols() != n ||
        m->C.rows() != static_cast<Eigen::Index>(a.zone_ids.size()) ||
        m->B_xu.size() != a.box_ids.size() || m->B_vu.size() != a.box_ids.size()) {
      doc.fail(pointer(""), "matrix sizes disagree with the labels");
    }
  }
  if (doc.has(pointer(""), "metadata")) {
    for (const auto& [k, v] : doc.object(pointer("/metadata")).items()) {
      a.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  return a;
}

void save_artifact(const std::filesystem::path& path, const ModelArtifact& artifact) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << artifact_to_json(artifact);
}

ModelArtifact load_artifact(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return artifact_from_json(buf.str(), path.string());
}

}  // namespace thermident
