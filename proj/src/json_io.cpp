#include "graphflow/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace graphflow {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& message) {
  throw Error(ErrorCode::parse_error, message);
}

void require_keys(const Json& obj, const char* what,
                  std::initializer_list<const char*> keys) {
  if (!obj.is_object()) bad(std::string(what) + " must be an object");
  for (const char* k : keys)
    if (!obj.contains(k)) bad(std::string(what) + " is missing field '" + k + "'");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) bad(std::string(what) + " has unknown field '" + it.key() + "'");
  }
}

double finite_number(const Json& v, const std::string& where) {
  if (!v.is_number()) bad(where + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad(where + " must be finite");
  return x;
}

std::string string_field(const Json& v, const std::string& where) {
  if (!v.is_string()) bad(where + " must be a string");
  return v.get<std::string>();
}

VelocityProfile parse_velocity(const Json& v, const std::string& edge_id) {
  const std::string where = "velocity of edge " + edge_id;
  if (!v.is_object() || !v.contains("kind")) bad(where + " needs a 'kind'");
  const std::string kind = string_field(v.at("kind"), where + ".kind");
  if (kind == "constant") {
    require_keys(v, where.c_str(), {"kind", "c"});
    return VelocityProfile::constant(finite_number(v.at("c"), where + ".c"));
  }
  if (kind == "pwl") {
    require_keys(v, where.c_str(), {"kind", "nodes"});
    const Json& nodes = v.at("nodes");
    if (!nodes.is_array() || nodes.size() < 2)
      bad(where + ".nodes must be an array of at least two [x,c] pairs");
    std::vector<std::pair<double, double>> pts;
    for (const Json& n : nodes) {
      if (!n.is_array() || n.size() != 2) bad(where + ".nodes entries must be [x,c]");
      pts.emplace_back(finite_number(n.at(0), where + ".nodes x"),
                       finite_number(n.at(1), where + ".nodes c"));
    }
    auto profile = VelocityProfile::piecewise_linear(std::move(pts));
    std::string why;
    if (!profile.well_formed(&why)) bad(where + ": " + why);
    return profile;
  }
  bad(where + " has unknown kind '" + kind + "'");
}

Json velocity_to_json(const VelocityProfile& p) {
  Json v;
  if (p.is_constant()) {
    v["kind"] = "constant";
    v["c"] = p.nodes().front().second;
  } else {
    v["kind"] = "pwl";
    Json nodes = Json::array();
    for (const auto& [x, c] : p.nodes()) nodes.push_back(Json::array({x, c}));
    v["nodes"] = std::move(nodes);
  }
  return v;
}

}  // namespace

MetricGraph graph_from_json(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
  require_keys(doc, "graph", {"vertices", "edges"});
  if (!doc.at("vertices").is_array()) bad("'vertices' must be an array");
  if (!doc.at("edges").is_array()) bad("'edges' must be an array");

  MetricGraph g;
  for (const Json& jv : doc.at("vertices")) {
    require_keys(jv, "vertex", {"id", "buffer"});
    Vertex v;
    v.id = string_field(jv.at("id"), "vertex id");
    const Json& buf = jv.at("buffer");
    if (buf.is_null()) {
      v.buffer.reset();
    } else {
      require_keys(buf, ("buffer of vertex " + v.id).c_str(), {"k"});
      v.buffer = BufferSpec{finite_number(buf.at("k"), "buffer k of " + v.id)};
    }
    g.vertices.push_back(std::move(v));
  }
  for (const Json& je : doc.at("edges")) {
    require_keys(je, "edge",
                 {"id", "tail", "head", "length", "weight", "velocity"});
    Edge e;
    e.id = string_field(je.at("id"), "edge id");
    e.tail = string_field(je.at("tail"), "tail of edge " + e.id);
    e.head = string_field(je.at("head"), "head of edge " + e.id);
    e.length = finite_number(je.at("length"), "length of edge " + e.id);
    e.weight = finite_number(je.at("weight"), "weight of edge " + e.id);
    e.velocity = parse_velocity(je.at("velocity"), e.id);
    g.edges.push_back(std::move(e));
  }
  return g;
}

std::string graph_to_json(const MetricGraph& g) {
  Json doc;
  Json vertices = Json::array();
  for (const auto& v : g.vertices) {
    Json jv;
    jv["id"] = v.id;
    jv["buffer"] = v.buffer ? Json{{"k", v.buffer->k}} : Json(nullptr);
    vertices.push_back(std::move(jv));
  }
  Json edges = Json::array();
  for (const auto& e : g.edges) {
    Json je;
    je["id"] = e.id;
    je["tail"] = e.tail;
    je["head"] = e.head;
    je["length"] = e.length;
    je["weight"] = e.weight;
    je["velocity"] = velocity_to_json(e.velocity);
    edges.push_back(std::move(je));
  }
  doc["vertices"] = std::move(vertices);
  doc["edges"] = std::move(edges);
  return doc.dump(2) + "\n";
}

MetricGraph load_graph_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return graph_from_json(buf.str());
}

void save_graph_file(const MetricGraph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path);
  out << graph_to_json(g);
}

std::string graph_hash(const MetricGraph& g) {
  const std::string text = graph_to_json(g);
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace graphflow
