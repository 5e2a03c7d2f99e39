#include "magflow/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>

namespace magflow {

std::string fnv1a64_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

std::shared_ptr<const LieAlgebraSpec> algebra_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("algebra: expected an object");
  if (j.contains("family")) {
    const std::string family = j.at("family").get<std::string>();
    if (!j.contains("n") || !j.at("n").is_number_integer())
      throw ConfigError("algebra.n: required integer for family specs");
    const int n = j.at("n").get<int>();
    if (family == "so") return LieAlgebraSpec::so(n);
    if (family == "su") return LieAlgebraSpec::su(n);
    throw ConfigError("algebra.family: unknown family '" + family + "'");
  }
  if (j.contains("basis")) {
    if (!j.contains("rank")) throw ConfigError("algebra.rank: required with explicit basis");
    const int rank = j.at("rank").get<int>();
    const std::string name = j.value("name", std::string("custom"));
    std::vector<CMat> basis;
    for (const auto& jm : j.at("basis")) {
      const std::size_t rows = jm.size();
      if (rows == 0) throw ConfigError("algebra.basis: empty matrix");
      const std::size_t cols = jm.at(0).size();
      CMat m(rows, cols);
      for (std::size_t r = 0; r < rows; ++r) {
        if (jm.at(r).size() != cols)
          throw ConfigError("algebra.basis: ragged matrix rows");
        for (std::size_t c = 0; c < cols; ++c) {
          const auto& e = jm.at(r).at(c);
          if (e.is_array()) {
            if (e.size() != 2) throw ConfigError("algebra.basis: complex entries are [re, im]");
            m(r, c) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
          } else {
            m(r, c) = Complex(e.get<double>(), 0.0);
          }
        }
      }
      basis.push_back(std::move(m));
    }
    return LieAlgebraSpec::from_basis(name, std::move(basis), rank);
  }
  throw ConfigError("algebra: need either {family, n} or {name, rank, basis}");
}

Json phase_point_to_json(const LieAlgebraSpec& spec, const PhasePoint& pt,
                         const std::string& algebra_id) {
  Json j;
  j["algebra"] = algebra_id;
  j["x"] = std::vector<double>(pt.x.data(), pt.x.data() + pt.x.size());
  j["p"] = std::vector<double>(pt.p.data(), pt.p.data() + pt.p.size());
  const Eigen::VectorXcd inv = spec.invariant_values(spec.matrix_of(pt.x));
  Json jinv = Json::array();
  for (Eigen::Index k = 0; k < inv.size(); ++k)
    jinv.push_back({inv[k].real(), inv[k].imag()});
  j["invariants"] = jinv;
  return j;
}

PhasePoint phase_point_from_json(const LieAlgebraSpec& spec, const Json& j) {
  PhasePoint pt;
  const auto x = j.at("x").get<std::vector<double>>();
  const auto p = j.at("p").get<std::vector<double>>();
  if (static_cast<int>(x.size()) != spec.dim() ||
      static_cast<int>(p.size()) != spec.dim())
    throw InputError("phase point: coordinate length does not match the algebra");
  pt.x = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
  pt.p = Eigen::Map<const Eigen::VectorXd>(p.data(), p.size());
  return pt;  // no witness survives serialization
}

std::string family_kind_name(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::ShiftAc: return "shift_Ac";
    case FamilyKind::SemidirectB: return "semidirect_B";
    case FamilyKind::MomentumComponents: return "momentum_components";
    case FamilyKind::Hamiltonian: return "hamiltonian";
    case FamilyKind::S2Linear: return "s2_linear";
    case FamilyKind::InvariantCatalog: return "invariant_catalog";
  }
  return "unknown";
}

Json drift_report_to_json(const std::vector<MemberDrift>& drifts) {
  Json arr = Json::array();
  for (const auto& d : drifts) {
    Json e;
    e["kind"] = family_kind_name(d.kind);
    e["j"] = d.invariant_index;
    e["lambda"] = d.lambda;
    e["part"] = d.part == InvariantPart::Re ? "re" : "im";
    e["label"] = d.label;
    e["value_t0"] = d.value_t0;
    e["max_drift_abs"] = d.max_drift_abs;
    e["max_drift_rel"] = d.max_drift_rel;
    arr.push_back(std::move(e));
  }
  return arr;
}

Json completeness_to_json(const CompletenessReport& rep) {
  Json j;
  j["ddim"] = rep.ddim;
  j["dind"] = rep.dind;
  j["phase_dim"] = rep.phase_dim;
  j["corank"] = rep.corank;
  j["verdict"] = rep.verdict;
  j["tolerance"] = rep.tolerance;
  j["min_singular_gap"] = rep.min_gap;
  j["samples"] = rep.samples;
  j["outlier_samples"] = rep.outlier_samples;
  if (!rep.note.empty()) j["note"] = rep.note;
  Json per = Json::array();
  for (const auto& r : rep.per_sample) {
    per.push_back({{"ddim", r.ddim},
                   {"dind", r.dind},
                   {"tangent_dim", r.tangent_dim},
                   {"ambiguous", r.ambiguous}});
  }
  j["per_sample"] = per;
  return j;
}

namespace {
void require_stream(const std::ofstream& out, const std::filesystem::path& path) {
  if (!out) throw IoError("cannot open for writing: " + path.string());
}
} // namespace

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          int algebra_dim, const std::string& manifest_hash) {
  std::ofstream out(path);
  require_stream(out, path);
  out << "# manifest_hash " << manifest_hash << "\n";
  out << "t";
  for (int i = 1; i <= algebra_dim; ++i) out << ",x_" << i;
  for (int i = 1; i <= algebra_dim; ++i) out << ",p_" << i;
  out << ",H,res_orbit,res_cotangent\n";
  char buf[32];
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << ',' << buf;
  };
  for (std::size_t s = 0; s < traj.size(); ++s) {
    std::snprintf(buf, sizeof(buf), "%.17g", traj.times[s]);
    out << buf;
    const Eigen::VectorXd& y = traj.states[s];
    for (Eigen::Index i = 0; i < y.size(); ++i) emit(y[i]);
    emit(traj.diagnostics[s].energy);
    emit(traj.diagnostics[s].res_orbit);
    emit(traj.diagnostics[s].res_cotangent);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void write_matrix_csv(const std::filesystem::path& path, const Mat& m,
                      const std::string& manifest_hash) {
  std::ofstream out(path);
  require_stream(out, path);
  out << "# manifest_hash " << manifest_hash << "\n";
  char buf[32];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  require_stream(out, path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw ConfigError("JSON parse error in " + path.string() + ": " + e.what());
  }
  return j;
}

} // namespace magflow
