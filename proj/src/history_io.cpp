#include "cyclofem/history_io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "chunkfile.hpp"

namespace cyclofem {

namespace {

using chunkfile::Chunk;
using chunkfile::Dtype;
using chunkfile::find_chunk;
using chunkfile::vec_chunk;

constexpr char kMagic[8] = {'C', 'Y', 'F', 'H', 'I', 'S', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

std::vector<double> expect_vec(const std::vector<Chunk>& chunks, const std::string& name,
                               std::uint64_t len, const std::string& path) {
  const Chunk& c = find_chunk(chunks, name, Dtype::f64, path);
  if (c.rows != 1 || c.cols != len)
    throw std::runtime_error("history chunk '" + name + "' has wrong shape: " + path);
  return c.f;
}

}  // namespace

void save_history(const HistoryRecord& record, const std::string& path) {
  const auto n = static_cast<std::uint64_t>(record.steps());
  std::vector<Chunk> chunks;
  chunks.push_back(vec_chunk("times", record.times));
  chunks.push_back(vec_chunk("loads", record.loads));
  chunks.push_back(vec_chunk("work", record.work));
  chunks.push_back(vec_chunk("dissipation", record.dissipation));
  chunks.push_back(vec_chunk("stored", record.stored));

  Chunk it;
  it.name = "newton_iters";
  it.dtype = Dtype::i64;
  it.rows = 1;
  it.cols = record.newton_iters.size();
  for (int v : record.newton_iters) it.i.push_back(v);
  chunks.push_back(std::move(it));

  Chunk u;
  u.name = "u";
  u.rows = static_cast<std::uint64_t>(record.u.rows());
  u.cols = static_cast<std::uint64_t>(record.u.cols());
  u.f.assign(record.u.data(), record.u.data() + record.u.size());  // column-major
  chunks.push_back(std::move(u));

  Chunk ss;
  ss.name = "snapshot_steps";
  ss.dtype = Dtype::i64;
  ss.rows = 1;
  ss.cols = record.snapshot_steps.size();
  for (long long v : record.snapshot_steps) ss.i.push_back(v);
  chunks.push_back(std::move(ss));

  Chunk sn;
  sn.name = "snapshots";
  sn.rows = record.snapshots.size();
  sn.cols = record.snapshots.empty() ? 0 : record.snapshots.front().size();
  for (const auto& blob : record.snapshots) {
    if (blob.size() != sn.cols)
      throw std::invalid_argument("history: snapshots must all have the same length");
    sn.f.insert(sn.f.end(), blob.begin(), blob.end());
  }
  chunks.push_back(std::move(sn));

  Chunk stride;
  stride.name = "snapshot_stride";
  stride.dtype = Dtype::i64;
  stride.rows = 1;
  stride.cols = 1;
  stride.i.push_back(record.snapshot_stride);
  chunks.push_back(std::move(stride));

  chunkfile::write_file(path, kMagic, kVersion, chunks);

  nlohmann::json meta;
  meta["format"] = "cyclofem-history";
  meta["version"] = kVersion;
  meta["steps"] = n;
  meta["n_free"] = record.u.rows();
  meta["snapshot_stride"] = record.snapshot_stride;
  meta["snapshot_count"] = record.snapshots.size();
  meta["layout"] = "u column-major (dof x step); snapshots row-major (one row per step)";
  auto& list = meta["chunks"] = nlohmann::json::array();
  for (const auto& c : chunks)
    list.push_back({{"name", c.name},
                    {"dtype", c.dtype == Dtype::f64 ? "f64" : "i64"},
                    {"rows", c.rows},
                    {"cols", c.cols}});
  std::ofstream js(path + ".json");
  if (!js) throw std::runtime_error("cannot open history sidecar for writing: " + path + ".json");
  js << meta.dump(2) << "\n";
}

HistoryRecord load_history(const std::string& path) {
  const std::vector<Chunk> chunks = chunkfile::read_file(path, kMagic, kVersion);

  HistoryRecord r;
  const Chunk& times = find_chunk(chunks, "times", Dtype::f64, path);
  if (times.rows != 1) throw std::runtime_error("history chunk 'times' has wrong shape: " + path);
  r.times = times.f;
  const std::uint64_t n = times.cols;
  r.loads = expect_vec(chunks, "loads", n, path);
  r.work = expect_vec(chunks, "work", n, path);
  r.dissipation = expect_vec(chunks, "dissipation", n, path);
  r.stored = expect_vec(chunks, "stored", n, path);

  const Chunk& it = find_chunk(chunks, "newton_iters", Dtype::i64, path);
  if (it.rows != 1 || it.cols != n)
    throw std::runtime_error("history chunk 'newton_iters' has wrong shape: " + path);
  for (auto v : it.i) r.newton_iters.push_back(static_cast<int>(v));

  const Chunk& u = find_chunk(chunks, "u", Dtype::f64, path);
  if (u.cols != n) throw std::runtime_error("history chunk 'u' has wrong shape: " + path);
  r.u = Eigen::Map<const Eigen::MatrixXd>(u.f.data(), static_cast<Eigen::Index>(u.rows),
                                          static_cast<Eigen::Index>(u.cols));

  const Chunk& ss = find_chunk(chunks, "snapshot_steps", Dtype::i64, path);
  for (auto v : ss.i) r.snapshot_steps.push_back(v);
  const Chunk& sn = find_chunk(chunks, "snapshots", Dtype::f64, path);
  if (sn.rows != r.snapshot_steps.size())
    throw std::runtime_error("history snapshot count mismatch: " + path);
  for (std::uint64_t i = 0; i < sn.rows; ++i)
    r.snapshots.emplace_back(sn.f.begin() + static_cast<std::ptrdiff_t>(i * sn.cols),
                             sn.f.begin() + static_cast<std::ptrdiff_t>((i + 1) * sn.cols));
  const Chunk& stride = find_chunk(chunks, "snapshot_stride", Dtype::i64, path);
  if (stride.i.size() != 1)
    throw std::runtime_error("history chunk 'snapshot_stride' has wrong shape: " + path);
  r.snapshot_stride = static_cast<int>(stride.i.front());
  return r;
}

void export_trace_csv(const HistoryRecord& record, const std::vector<TraceColumn>& columns,
                      const std::string& path) {
  for (const auto& c : columns)
    if (c.dof < 0 || c.dof >= record.u.rows())
      throw std::out_of_range("trace column '" + c.name + "' is out of range");
  std::ofstream os(path, std::ios::binary);  // binary: keep CRLF exact on all platforms
  if (!os) throw std::runtime_error("cannot open CSV file for writing: " + path);

  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
      if (ch == '"') q += '"';
      q += ch;
    }
    q += '"';
    return q;
  };
  os << "step,time,load";
  for (const auto& c : columns) os << "," << quote(c.name);
  os << "\r\n";

  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (long long s = 0; s < record.steps(); ++s) {
    os << s << "," << num(record.times[static_cast<std::size_t>(s)]) << ","
       << num(record.loads[static_cast<std::size_t>(s)]);
    for (const auto& c : columns) os << "," << num(record.u(c.dof, s));
    os << "\r\n";
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace cyclofem
