#include "nmtfuse/checkpoint.hpp"

#include <cstring>

#include "nmtfuse/util.hpp"

namespace nmtfuse {

namespace {

constexpr char kMagic[8] = {'N', 'M', 'T', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw IoError("truncated checkpoint");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put<uint64_t>(out, entries.size());
  for (const Entry& e : entries) {
    put<uint32_t>(out, static_cast<uint32_t>(e.name.size()));
    out += e.name;
    put<uint8_t>(out, 0);  // float64
    put<uint32_t>(out, static_cast<uint32_t>(e.shape.size()));
    for (int d : e.shape) put<uint64_t>(out, static_cast<uint64_t>(d));
    const size_t bytes = e.data.size() * sizeof(double);
    const size_t at = out.size();
    out.resize(at + bytes);
    std::memcpy(out.data() + at, e.data.data(), bytes);
  }
  put<uint64_t>(out, metadata.size());
  out += metadata;
  write_file_atomic(path, out);
}

Checkpoint Checkpoint::load(const std::string& path) {
  const std::string in = read_file(path);
  size_t pos = 0;
  if (in.size() < sizeof(kMagic) || std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0)
    throw IoError(path + " is not a checkpoint (bad magic)");
  pos = sizeof(kMagic);
  Checkpoint ck;
  const uint64_t n = take<uint64_t>(in, pos);
  ck.entries.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    Entry e;
    const uint32_t name_len = take<uint32_t>(in, pos);
    if (pos + name_len > in.size()) throw IoError("truncated checkpoint name");
    e.name.assign(in.data() + pos, name_len);
    pos += name_len;
    const uint8_t dtype = take<uint8_t>(in, pos);
    if (dtype != 0) throw IoError("unsupported checkpoint dtype " + std::to_string(dtype));
    const uint32_t ndim = take<uint32_t>(in, pos);
    int64_t count = 1;
    for (uint32_t d = 0; d < ndim; ++d) {
      const uint64_t dim = take<uint64_t>(in, pos);
      e.shape.push_back(static_cast<int>(dim));
      count *= static_cast<int64_t>(dim);
    }
    const size_t bytes = static_cast<size_t>(count) * sizeof(double);
    if (pos + bytes > in.size()) throw IoError("truncated checkpoint payload");
    e.data.resize(count);
    std::memcpy(e.data.data(), in.data() + pos, bytes);
    pos += bytes;
    ck.entries.push_back(std::move(e));
  }
  const uint64_t meta_len = take<uint64_t>(in, pos);
  if (pos + meta_len > in.size()) throw IoError("truncated checkpoint metadata");
  ck.metadata.assign(in.data() + pos, meta_len);
  return ck;
}

Checkpoint Checkpoint::from_params(const nn::ParamStore& params, std::string metadata) {
  Checkpoint ck;
  ck.metadata = std::move(metadata);
  for (const auto& [name, t] : params.items()) ck.entries.push_back({name, t.shape(), t.data()});
  return ck;
}

void Checkpoint::restore_into(nn::ParamStore& params) const {
  if (entries.size() != params.size())
    throw IoError("checkpoint has " + std::to_string(entries.size()) + " tensors, model expects " +
                  std::to_string(params.size()));
  for (const Entry& e : entries) {
    ag::Tensor t = params.get(e.name);
    if (t.shape() != e.shape)
      throw IoError("shape mismatch restoring " + e.name + ": file " + ag::shape_str(e.shape) +
                    " vs model " + ag::shape_str(t.shape()));
    t.mutable_data() = e.data;
  }
}

// Section headers are detected on the raw line; raw payload lines are
// tab-prefixed on write so arbitrary tokens can never masquerade as headers.
std::string Checkpoint::meta_value(const std::string& section, const std::string& key) const {
  std::string cur;
  size_t pos = 0;
  while (pos < metadata.size()) {
    size_t end = metadata.find('\n', pos);
    if (end == std::string::npos) end = metadata.size();
    const std::string line = metadata.substr(pos, end - pos);
    pos = end + 1;
    if (line.size() >= 2 && line.front() == '[' && line.back() == ']') {
      cur = line.substr(1, line.size() - 2);
      continue;
    }
    if (cur != section) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    if (strip(line.substr(0, eq)) == key) return strip(line.substr(eq + 1));
  }
  return "";
}

std::vector<std::string> Checkpoint::meta_section_lines(const std::string& section) const {
  std::vector<std::string> out;
  std::string cur;
  size_t pos = 0;
  while (pos < metadata.size()) {
    size_t end = metadata.find('\n', pos);
    if (end == std::string::npos) end = metadata.size();
    std::string line = metadata.substr(pos, end - pos);
    pos = end + 1;
    if (line.size() >= 2 && line.front() == '[' && line.back() == ']') {
      cur = line.substr(1, line.size() - 2);
      continue;
    }
    if (cur != section || line.empty()) continue;
    if (line[0] == '\t') line.erase(0, 1);
    out.push_back(line);
  }
  return out;
}

Checkpoint average_checkpoints(const std::vector<Checkpoint>& checkpoints) {
  if (checkpoints.empty()) throw UsageError("average_checkpoints: empty list");
  Checkpoint avg = checkpoints[0];
  for (size_t k = 1; k < checkpoints.size(); ++k) {
    const Checkpoint& ck = checkpoints[k];
    if (ck.entries.size() != avg.entries.size())
      throw IoError("average_checkpoints: tensor count mismatch");
    for (size_t i = 0; i < avg.entries.size(); ++i) {
      if (ck.entries[i].name != avg.entries[i].name || ck.entries[i].shape != avg.entries[i].shape)
        throw IoError("average_checkpoints: mismatched tensor " + ck.entries[i].name);
      for (size_t j = 0; j < avg.entries[i].data.size(); ++j)
        avg.entries[i].data[j] += ck.entries[i].data[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(checkpoints.size());
  for (auto& e : avg.entries)
    for (double& v : e.data) v *= inv;
  return avg;
}

std::string meta_block(const std::string& section,
                       const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string out = "[" + section + "]\n";
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::string meta_raw_block(const std::string& section, const std::vector<std::string>& lines) {
  std::string out = "[" + section + "]\n";
  for (const std::string& l : lines) out += "\t" + l + "\n";
  return out;
}

}  // namespace nmtfuse
