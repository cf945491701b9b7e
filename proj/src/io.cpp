#include "scns/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "scns/errors.hpp"

namespace scns {

namespace {

constexpr char kMagic[5] = {'S', 'C', 'N', 'S', '1'};
constexpr char kIncMagic[6] = {'S', 'C', 'N', 'S', 'W', '1'};

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  template <class T>
  T get() {
    if (pos_ + sizeof(T) > b_.size()) throw IoError("truncated file");
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void expect(const char* magic, std::size_t n) {
    if (b_.size() < n || std::memcmp(b_.data(), magic, n) != 0) throw IoError("bad magic");
    pos_ = n;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<std::uint8_t> encode_snapshot(const State& state, const ModelParams& p, int noise_modes) {
  const TorusGrid& g = state.grid();
  std::vector<std::uint8_t> out(kMagic, kMagic + 5);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.dim));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.n));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.galerkin_cutoff));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(noise_modes));
  for (double v : {state.t, g.length, p.a, p.gamma, p.mu, p.eta, p.total_mass, p.epsilon, p.delta,
                   p.Gamma, p.truncation_radius})
    put<double>(out, v);
  for (double v : samples_of(state.rho)) put<double>(out, v);
  for (int i = 0; i < g.dim; ++i)
    for (double v : samples_of(state.u[i])) put<double>(out, v);
  return out;
}

State decode_snapshot(const std::vector<std::uint8_t>& bytes, SnapshotHeader* header) {
  Reader r(bytes);
  r.expect(kMagic, 5);
  SnapshotHeader h;
  h.grid.dim = static_cast<int>(r.get<std::uint32_t>());
  h.grid.n = static_cast<int>(r.get<std::uint32_t>());
  h.grid.galerkin_cutoff = static_cast<int>(r.get<std::uint32_t>());
  h.noise_modes = static_cast<int>(r.get<std::uint32_t>());
  h.t = r.get<double>();
  h.grid.length = r.get<double>();
  ModelParams& p = h.params;
  for (double* f : {&p.a, &p.gamma, &p.mu, &p.eta, &p.total_mass, &p.epsilon, &p.delta, &p.Gamma,
                    &p.truncation_radius})
    *f = r.get<double>();
  p.noise_modes = h.noise_modes;
  try {
    h.grid.validate();
  } catch (const Error& e) {
    throw IoError(std::string("snapshot header: ") + e.what());
  }
  const std::size_t n = h.grid.size();
  auto block = [&] {
    std::vector<double> v(n);
    for (auto& x : v) x = r.get<double>();
    return v;
  };
  const SpectralField rho = SpectralField::from_samples(h.grid, block());
  SpectralVectorField u;
  for (int i = 0; i < h.grid.dim; ++i) u.components.push_back(SpectralField::from_samples(h.grid, block()));
  if (!r.done()) throw IoError("trailing bytes in snapshot");
  if (header) *header = h;
  return make_state(h.t, rho, u);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  const auto b = read_bytes(path);
  return {b.begin(), b.end()};
}

void write_snapshot(const std::filesystem::path& path, const State& state, const ModelParams& params,
                    int noise_modes) {
  const auto b = encode_snapshot(state, params, noise_modes);
  write_file_atomic(path, std::string(b.begin(), b.end()));
}

State read_snapshot(const std::filesystem::path& path, SnapshotHeader* header) {
  return decode_snapshot(read_bytes(path), header);
}

std::string trajectory_csv(const TrajectoryRecord& record) {
  std::string out = "t,mass,energy,kinetic,sobolev12_sq,min_rho,seed\n";
  const std::string seed = std::to_string(record.seed);
  for (const auto& r : record.index) {
    for (double v : {r.t, r.mass, r.energy, r.kinetic, r.sobolev12_sq, r.min_rho}) {
      out += format_double(v);
      out += ',';
    }
    out += seed;
    out += '\n';
  }
  return out;
}

void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& record) {
  write_file_atomic(path, trajectory_csv(record));
}

std::vector<IndexRow> read_trajectory_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,mass,energy", 0) != 0) throw IoError("bad trajectory header");
  std::vector<IndexRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ls, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != 7) throw IoError("bad trajectory row: " + line);
    rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
  }
  return rows;
}

void write_increments(const std::filesystem::path& path, const TrajectoryRecord& record) {
  std::vector<std::uint8_t> out(kIncMagic, kIncMagic + 6);
  const std::uint64_t steps =
      record.noise_modes > 0 ? record.increments.size() / static_cast<std::size_t>(record.noise_modes) : 0;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(record.noise_modes));
  put<std::uint64_t>(out, steps);
  put<double>(out, record.dt);
  for (double v : record.increments) put<double>(out, v);
  write_file_atomic(path, std::string(out.begin(), out.end()));
}

std::vector<double> read_increments(const std::filesystem::path& path, int* modes, double* dt) {
  const auto b = read_bytes(path);
  Reader r(b);
  r.expect(kIncMagic, 6);
  const auto k = r.get<std::uint32_t>();
  const auto steps = r.get<std::uint64_t>();
  const double step = r.get<double>();
  std::vector<double> v(static_cast<std::size_t>(steps) * k);
  for (auto& x : v) x = r.get<double>();
  if (!r.done()) throw IoError("trailing bytes in increments file");
  if (modes) *modes = static_cast<int>(k);
  if (dt) *dt = step;
  return v;
}

}  // namespace scns
