// JSON and CSV encodings, atomic file output, and content hashing.

#pragma once

#include "iblab/disenib.hpp"
#include "iblab/instances.hpp"
#include "iblab/lagrangian.hpp"
#include "iblab/prob.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unistd.h>

namespace iblab {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

// %.9g text, used for every report and table value.
inline std::string format_sig9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// The double nearest to the 9-significant-digit rendering of v, so JSON
// output carries no more than 9 digits.
inline double round_sig9(double v) { return std::stod(format_sig9(v)); }

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& rows, const char* what) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array())
    throw ValidationError(std::string(what) + ": \"probs\" must be a non-empty array of arrays");
  const std::size_t cols = rows[0].size();
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!rows[r].is_array() || rows[r].size() != cols)
      throw ValidationError(std::string(what) + ": ragged \"probs\" matrix");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!rows[r][c].is_number()) throw ValidationError(std::string(what) + ": non-numeric probability");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
    }
  }
  return m;
}

inline std::vector<std::string> labels_from_json(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  if (!j[key].is_array()) throw ValidationError(std::string("\"") + key + "\" must be an array");
  for (const auto& v : j[key]) out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
  return out;
}

inline json to_json(const JointXY& data) {
  return {{"schema", kSchemaVersion},
          {"x_labels", data.x_labels()},
          {"y_labels", data.y_labels()},
          {"probs", matrix_to_json(data.probs())}};
}

inline JointXY joint_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("joint: expected a JSON object");
  if (!j.contains("probs")) throw ValidationError("joint: missing \"probs\"");
  return JointXY(matrix_from_json(j["probs"], "joint"), labels_from_json(j, "x_labels"),
                 labels_from_json(j, "y_labels"));
}

inline json to_json(const Encoder& enc, const std::vector<std::string>& x_labels) {
  return {{"schema", kSchemaVersion},
          {"x_labels", x_labels},
          {"z_cardinality", enc.card_z()},
          {"probs", matrix_to_json(enc.cond())}};
}

inline Encoder encoder_from_json(const json& j) {
  if (!j.is_object() || !j.contains("probs")) throw ValidationError("encoder: missing \"probs\"");
  Encoder enc(matrix_from_json(j["probs"], "encoder"));
  if (j.contains("z_cardinality") && j["z_cardinality"].get<std::size_t>() != enc.card_z())
    throw DimensionError("encoder: z_cardinality disagrees with matrix width");
  return enc;
}

inline json to_json(const ConsistencyReport& r) {
  return {{"h_y", round_sig9(r.h_y)},
          {"h_x", round_sig9(r.h_x)},
          {"i_xy", round_sig9(r.i_xy)},
          {"i_xt", round_sig9(r.i_xt)},
          {"i_ty", round_sig9(r.i_ty)},
          {"i_xsy", round_sig9(r.i_xsy)},
          {"i_st", round_sig9(r.i_st)},
          {"objective", round_sig9(r.objective)},
          {"gap", round_sig9(r.gap)},
          {"gap_vs_i_xy", round_sig9(r.gap_vs_i_xy)},
          {"capacity_shortfall", round_sig9(r.capacity_shortfall)},
          {"epsilon", round_sig9(r.epsilon)},
          {"consistent", r.consistent}};
}

inline json to_json(const IBPoint& p) {
  return {{"beta", round_sig9(p.beta)},
          {"i_xt_nats", round_sig9(p.i_xt)},
          {"i_ty_nats", round_sig9(p.i_ty)},
          {"objective", round_sig9(p.objective)},
          {"converged", p.converged},
          {"restarts_used", p.restarts_used},
          {"best_restart_seed", p.best_restart_seed}};
}

inline json to_json(const OptimizerConfig& c) {
  return {{"step_size", c.step_size},           {"max_iters", c.max_iters},
          {"grad_tolerance", c.grad_tolerance}, {"restarts", c.restarts},
          {"init_scale", c.init_scale},         {"seed", c.seed}};
}

inline json to_json(const InstanceSpec& s) {
  json j = {{"family", to_string(s.family)}, {"n", s.n}, {"k", s.k}};
  if (s.family == InstanceFamily::noisy_mod) j["eta"] = s.noise;
  if (s.family == InstanceFamily::random_joint) j["seed"] = s.seed;
  return j;
}

inline constexpr const char* kSweepCsvHeader = "beta,i_xt_nats,i_ty_nats,objective,converged,restarts_used";

inline std::string sweep_csv(const std::vector<IBPoint>& points) {
  std::ostringstream os;
  os << kSweepCsvHeader << '\n';
  for (const auto& p : points)
    os << format_sig9(p.beta) << ',' << format_sig9(p.i_xt) << ',' << format_sig9(p.i_ty) << ','
       << format_sig9(p.objective) << ',' << (p.converged ? "true" : "false") << ',' << p.restarts_used << '\n';
  return os.str();
}

// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string content_hash(std::string_view bytes) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

// Writes to a sibling temporary file and renames it over `path`, so readers
// see either the old file or the complete new one.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  namespace fs = std::filesystem;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp." + std::to_string(::getpid()));
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    os.flush();
    if (!os) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("cannot rename into " + path.string());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline JointXY load_joint(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return joint_from_json(j);
}

}  // namespace iblab
