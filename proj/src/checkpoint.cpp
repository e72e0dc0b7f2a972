#include "graphpure/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace graphpure {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json j;
  j["shape"] = {m.rows(), m.cols()};
  j["data"] = std::vector<double>(m.data(), m.data() + m.size());
  return j;
}

Matrix matrix_from_json(const json& j) {
  const auto shape = j.at("shape").get<std::vector<std::size_t>>();
  if (shape.size() != 2) throw std::runtime_error("checkpoint: bad tensor shape");
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != shape[0] * shape[1])
    throw std::runtime_error("checkpoint: tensor data does not match shape");
  Matrix m(shape[0], shape[1]);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

json load_checked(const std::string& path, const std::string& expected_format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("checkpoint parse error in " + path + ": " + e.what());
  }
  if (j.value("format", "") != expected_format)
    throw std::runtime_error("checkpoint " + path + ": expected format tag '" + expected_format +
                             "'");
  return j;
}

void dump(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace

void save_classifier(const GcnParams& params, const std::string& path) {
  params.check_shapes();
  json j;
  j["format"] = "graphpure.gcn.v1";
  j["config"] = {{"in_dim", params.config.in_dim},
                 {"hidden1", params.config.hidden1},
                 {"hidden2", params.config.hidden2},
                 {"num_classes", params.config.num_classes},
                 {"task", params.config.task == Task::Node ? "node" : "graph"}};
  j["tensors"] = {{"w1", matrix_to_json(params.w1)},
                  {"w2", matrix_to_json(params.w2)},
                  {"w_out", matrix_to_json(params.w_out)},
                  {"b1", params.b1},
                  {"b2", params.b2},
                  {"b_out", params.b_out}};
  dump(j, path);
}

GcnParams load_classifier(const std::string& path) {
  const json j = load_checked(path, "graphpure.gcn.v1");
  GcnParams p;
  const auto& c = j.at("config");
  p.config.in_dim = c.at("in_dim").get<std::size_t>();
  p.config.hidden1 = c.at("hidden1").get<std::size_t>();
  p.config.hidden2 = c.at("hidden2").get<std::size_t>();
  p.config.num_classes = c.at("num_classes").get<std::size_t>();
  const std::string task = c.at("task").get<std::string>();
  if (task != "node" && task != "graph")
    throw std::runtime_error("checkpoint " + path + ": unknown task '" + task + "'");
  p.config.task = task == "node" ? Task::Node : Task::Graph;
  const auto& t = j.at("tensors");
  p.w1 = matrix_from_json(t.at("w1"));
  p.w2 = matrix_from_json(t.at("w2"));
  p.w_out = matrix_from_json(t.at("w_out"));
  p.b1 = t.at("b1").get<std::vector<double>>();
  p.b2 = t.at("b2").get<std::vector<double>>();
  p.b_out = t.at("b_out").get<std::vector<double>>();
  p.check_shapes();
  return p;
}

void save_denoiser(const DenoiserParams& params, const std::string& path) {
  params.check_shapes();
  json j;
  j["format"] = "graphpure.denoiser.v1";
  j["config"] = {{"in_dim", params.config.in_dim}, {"width", params.config.width}};
  j["tensors"] = {{"w_in", matrix_to_json(params.w_in)},
                  {"w_m1", matrix_to_json(params.w_m1)},
                  {"w_m2", matrix_to_json(params.w_m2)},
                  {"w_s1", matrix_to_json(params.w_s1)},
                  {"w_s2", matrix_to_json(params.w_s2)},
                  {"b_in", params.b_in},
                  {"b_m1", params.b_m1},
                  {"b_m2", params.b_m2},
                  {"b_s1", params.b_s1},
                  {"b_s2", params.b_s2}};
  dump(j, path);
}

DenoiserParams load_denoiser(const std::string& path) {
  const json j = load_checked(path, "graphpure.denoiser.v1");
  DenoiserParams p;
  p.config.in_dim = j.at("config").at("in_dim").get<std::size_t>();
  p.config.width = j.at("config").at("width").get<std::size_t>();
  const auto& t = j.at("tensors");
  p.w_in = matrix_from_json(t.at("w_in"));
  p.w_m1 = matrix_from_json(t.at("w_m1"));
  p.w_m2 = matrix_from_json(t.at("w_m2"));
  p.w_s1 = matrix_from_json(t.at("w_s1"));
  p.w_s2 = matrix_from_json(t.at("w_s2"));
  p.b_in = t.at("b_in").get<std::vector<double>>();
  p.b_m1 = t.at("b_m1").get<std::vector<double>>();
  p.b_m2 = t.at("b_m2").get<std::vector<double>>();
  p.b_s1 = t.at("b_s1").get<std::vector<double>>();
  p.b_s2 = t.at("b_s2").get<std::vector<double>>();
  p.check_shapes();
  return p;
}

void save_schedule(const NoiseSchedule& schedule, const std::string& path) {
  schedule.validate();
  json j;
  j["format"] = "graphpure.schedule.v1";
  j["horizon"] = schedule.horizon;
  j["offset"] = schedule.offset;
  j["edge_density"] = schedule.edge_density;
  dump(j, path);
}

NoiseSchedule load_schedule(const std::string& path) {
  const json j = load_checked(path, "graphpure.schedule.v1");
  NoiseSchedule s = build_schedule(j.at("horizon").get<std::size_t>(),
                                   j.at("offset").get<double>(),
                                   j.at("edge_density").get<double>());
  s.validate();
  return s;
}

}  // namespace graphpure
