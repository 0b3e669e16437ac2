#pragma once

// File formats: binary/CSV datasets, MLE result JSON, convergence CSV.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "cvtomo/config.hpp"
#include "cvtomo/fisher.hpp"
#include "cvtomo/mle.hpp"
#include "cvtomo/sim.hpp"

namespace cvtomo {

// ---------------------------------------------------------------------------
// Dataset binary layout (all little-endian):
//   char[8]  "CVTDATA1"
//   u8       modality (0 = hom, 1 = het)
//   u32      d
//   f64 x1, f64 dx, u64 N, f64 p1, f64 dp
//   u64 S, f64[S] phases
//   i64 K, u64 seed
//   u64 len, i64[len] counts

namespace detail {

inline constexpr char kDatasetMagic[8] = {'C', 'V', 'T', 'D', 'A', 'T', 'A', '1'};

template <class T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw ValidationError("dataset file is truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

}  // namespace detail

inline void write_dataset(std::ostream& out, const Dataset& data) {
  out.write(detail::kDatasetMagic, sizeof detail::kDatasetMagic);
  detail::put<std::uint8_t>(out, data.modality == Modality::homodyne ? 0 : 1);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(data.dim));
  detail::put<double>(out, data.grid.x1);
  detail::put<double>(out, data.grid.dx);
  detail::put<std::uint64_t>(out, data.grid.n_bins);
  detail::put<double>(out, data.grid.p1);
  detail::put<double>(out, data.grid.dp);
  detail::put<std::uint64_t>(out, data.grid.phases.size());
  for (double th : data.grid.phases) detail::put<double>(out, th);
  detail::put<std::int64_t>(out, data.copies);
  detail::put<std::uint64_t>(out, data.seed);
  detail::put<std::uint64_t>(out, data.counts.size());
  for (auto c : data.counts) detail::put<std::int64_t>(out, c);
}

inline Dataset read_dataset(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, detail::kDatasetMagic, sizeof magic) != 0) {
    throw ValidationError("not a dataset file (bad magic)");
  }
  Dataset data;
  const auto mod = detail::get<std::uint8_t>(in);
  if (mod > 1) throw ValidationError("dataset file has unknown modality");
  data.modality = mod == 0 ? Modality::homodyne : Modality::heterodyne;
  data.dim = static_cast<Index>(detail::get<std::uint32_t>(in));
  data.grid.x1 = detail::get<double>(in);
  data.grid.dx = detail::get<double>(in);
  data.grid.n_bins = detail::get<std::uint64_t>(in);
  data.grid.p1 = detail::get<double>(in);
  data.grid.dp = detail::get<double>(in);
  const auto s = detail::get<std::uint64_t>(in);
  if (s > (1u << 24)) throw ValidationError("dataset file has an implausible phase count");
  data.grid.phases.resize(s);
  for (auto& th : data.grid.phases) th = detail::get<double>(in);
  data.copies = detail::get<std::int64_t>(in);
  data.seed = detail::get<std::uint64_t>(in);
  const auto len = detail::get<std::uint64_t>(in);
  data.grid.validate(data.modality);
  if (len != data.grid.record_size(data.modality)) throw ValidationError("dataset count length does not match its grid");
  data.counts.resize(len);
  for (auto& c : data.counts) c = detail::get<std::int64_t>(in);
  return data;
}

inline void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  write_dataset(out, data);
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return read_dataset(in);
}

/// CSV with columns phase, bin_index, count (heterodyne rows use phase 0).
inline void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << "phase,bin_index,count\n";
  const std::size_t per = data.modality == Modality::homodyne ? data.grid.n_bins : data.counts.size();
  for (std::size_t j = 0; j < data.counts.size(); ++j) {
    out << j / per << ',' << j % per << ',' << data.counts[j] << '\n';
  }
}

// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const MleResult& r) {
  nlohmann::json j;
  const Index d = r.rho_hat.dim();
  j["dim"] = d;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["final_ll"] = r.final_ll;
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(2 * d * d));
  for (Index row = 0; row < d; ++row) {
    for (Index col = 0; col < d; ++col) {
      flat.push_back(r.rho_hat(row, col).real());
      flat.push_back(r.rho_hat(row, col).imag());
    }
  }
  j["rho_hat"] = flat;
  return j;
}

inline MleResult mle_result_from_json(const nlohmann::json& j) {
  MleResult r;
  const Index d = j.at("dim").get<Index>();
  const auto flat = j.at("rho_hat").get<std::vector<double>>();
  if (static_cast<Index>(flat.size()) != 2 * d * d) throw ValidationError("rho_hat has the wrong length");
  MatrixXcd m(d, d);
  for (Index row = 0; row < d; ++row) {
    for (Index col = 0; col < d; ++col) {
      const auto k = static_cast<std::size_t>(2 * (row * d + col));
      m(row, col) = Complex(flat[k], flat[k + 1]);
    }
  }
  r.rho_hat = DensityMatrix::unchecked(std::move(m));
  r.iterations = j.at("iterations").get<int>();
  r.converged = j.at("converged").get<bool>();
  r.final_ll = j.at("final_ll").get<double>();
  return r;
}

inline void write_convergence_csv(std::ostream& out, const ConvergenceReport& report) {
  out << "S,x1,dx,trace_inv_cfi,max_neighbor_pct_err,converged\n";
  for (const auto& p : report.points) {
    out << p.phases << ',' << config::format_double(p.x1) << ',' << config::format_double(p.dx) << ','
        << config::format_double(p.trace_inv_cfi) << ','
        << (std::isnan(p.max_neighbor_pct_err) ? std::string("nan") : config::format_double(p.max_neighbor_pct_err))
        << ',' << (p.converged ? 1 : 0) << '\n';
  }
}

}  // namespace cvtomo
