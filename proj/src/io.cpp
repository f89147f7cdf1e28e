#include "semsheaf/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace semsheaf {
namespace {

template <class T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

template <class T>
T get_le(const std::string& in, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return value;
}

const json& require(const json& j, const char* key, const fs::path& where) {
  if (!j.contains(key)) {
    throw Error(ErrorKind::FormatError, where.string() + ": manifest is missing '" + key + "'");
  }
  return j.at(key);
}

}  // namespace

std::string encode_matrix(const Matrix& m) {
  if (m.rows() > 0xFFFFFFFFLL || m.cols() > 0xFFFFFFFFLL) {
    throw Error(ErrorKind::FormatError, "matrix too large for the SEMB header");
  }
  std::string out;
  out.reserve(kMatrixHeaderBytes + 8 * static_cast<std::size_t>(m.size()));
  out.append("SEMB", 4);
  put_le<std::uint16_t>(out, kMatrixFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  put_le<std::uint16_t>(out, 0);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(m(i, j)));
  }
  return out;
}

Matrix decode_matrix(const std::string& bytes, const std::string& origin) {
  if (bytes.size() < kMatrixHeaderBytes) throw Error(ErrorKind::FormatError, origin + ": truncated header");
  if (bytes.compare(0, 4, "SEMB") != 0) throw Error(ErrorKind::FormatError, origin + ": bad magic");
  const auto version = get_le<std::uint16_t>(bytes, 4);
  if (version != kMatrixFormatVersion) {
    throw Error(ErrorKind::FormatError, origin + ": unsupported version " + std::to_string(version));
  }
  const auto rows = get_le<std::uint32_t>(bytes, 6);
  const auto cols = get_le<std::uint32_t>(bytes, 10);
  const std::size_t expected = kMatrixHeaderBytes + 8 * static_cast<std::size_t>(rows) * cols;
  if (bytes.size() != expected) {
    throw Error(ErrorKind::FormatError, origin + ": file is " + std::to_string(bytes.size()) + " bytes, header implies " +
                                            std::to_string(expected));
  }
  Matrix m(rows, cols);
  std::size_t offset = kMatrixHeaderBytes;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      m(i, j) = std::bit_cast<double>(get_le<std::uint64_t>(bytes, offset));
      offset += 8;
    }
  }
  return m;
}

void write_matrix(const fs::path& path, const Matrix& m) { write_file_atomic(path, encode_matrix(m)); }

Matrix read_matrix(const fs::path& path) { return decode_matrix(read_file(path), path.string()); }

std::string checksum(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

std::string file_checksum(const fs::path& path) { return checksum(read_file(path)); }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::FormatError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::FormatError, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorKind::FormatError, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, dump_json(j)); }

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::FormatError, path.string() + ": " + e.what());
  }
}

std::string format_labels(const std::vector<int>& labels) {
  std::string out;
  for (int y : labels) out += std::to_string(y) + "\n";
  return out;
}

std::vector<int> read_labels(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<int> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      labels.push_back(std::stoi(line, &used));
      if (used != line.size()) throw std::invalid_argument(line);
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::FormatError, path.string() + ": bad label '" + line + "'");
    }
  }
  return labels;
}

void write_network(const fs::path& dir, const NetworkBundle& bundle) {
  const auto& X = bundle.embeddings;
  if (static_cast<Index>(bundle.agent_names.size()) != X.num_agents()) {
    throw Error(ErrorKind::ManifestMismatch, "agent name count differs from the agent count");
  }
  fs::create_directories(dir);
  json agents = json::array();
  for (Index i = 0; i < X.num_agents(); ++i) {
    const std::string& name = bundle.agent_names[static_cast<std::size_t>(i)];
    const std::string file = name + ".semb";
    const std::string bytes = encode_matrix(X.block(i));
    write_file_atomic(dir / file, bytes);
    agents.push_back({{"name", name}, {"file", file}, {"checksum", checksum(bytes)}});
  }
  json manifest = {
      {"format_version", kBundleFormatVersion},
      {"V", X.num_agents()},
      {"d", X.dim()},
      {"n", X.samples()},
      {"endianness", "little"},
      {"agents", agents},
  };
  if (bundle.families) manifest["families"] = *bundle.families;
  if (bundle.labels) {
    const std::string text = format_labels(*bundle.labels);
    write_file_atomic(dir / "labels.txt", text);
    manifest["labels_file"] = "labels.txt";
    manifest["labels_checksum"] = checksum(text);
  }
  if (!bundle.extra.is_null() && !bundle.extra.empty()) manifest["extra"] = bundle.extra;
  write_json(dir / "manifest.json", manifest);
}

NetworkBundle read_network(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  const json manifest = read_json(manifest_path);
  NetworkBundle bundle;
  Index V = 0;
  Index d = 0;
  Index n = 0;
  try {
    const int version = require(manifest, "format_version", manifest_path).get<int>();
    if (version != kBundleFormatVersion) {
      throw Error(ErrorKind::FormatError, "unsupported bundle format_version " + std::to_string(version));
    }
    if (manifest.value("endianness", std::string("little")) != "little") {
      throw Error(ErrorKind::FormatError, "only little-endian bundles are supported");
    }
    V = require(manifest, "V", manifest_path).get<Index>();
    d = require(manifest, "d", manifest_path).get<Index>();
    n = require(manifest, "n", manifest_path).get<Index>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::FormatError, manifest_path.string() + ": " + e.what());
  }
  const json& agents = require(manifest, "agents", manifest_path);
  if (!agents.is_array() || static_cast<Index>(agents.size()) != V) {
    throw Error(ErrorKind::ManifestMismatch, "manifest declares V = " + std::to_string(V) + " but lists " +
                                                 std::to_string(agents.size()) + " agents");
  }

  std::vector<AgentEmbeddings> blocks;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const json& a = agents[i];
    const std::string name = a.value("name", "agent_" + std::to_string(i));
    const fs::path file = dir / a.value("file", name + ".semb");
    const std::string bytes = read_file(file);
    Matrix m = decode_matrix(bytes, file.string());
    if (m.rows() != d || m.cols() != n) {
      throw Error(ErrorKind::ManifestMismatch, file.string() + " is " + std::to_string(m.rows()) + "x" +
                                                   std::to_string(m.cols()) + ", manifest declares " +
                                                   std::to_string(d) + "x" + std::to_string(n));
    }
    if (a.contains("checksum") && a.at("checksum").get<std::string>() != checksum(bytes)) {
      throw Error(ErrorKind::ChecksumError, file.string() + ": checksum mismatch");
    }
    bundle.agent_names.push_back(name);
    blocks.push_back({static_cast<int>(i), std::move(m)});
  }
  bundle.embeddings = validate_network(std::move(blocks));

  if (manifest.contains("families")) {
    auto families = manifest.at("families").get<std::vector<int>>();
    if (static_cast<Index>(families.size()) != V) {
      throw Error(ErrorKind::ManifestMismatch, "families list does not have V entries");
    }
    bundle.families = std::move(families);
  }
  if (manifest.contains("labels_file")) {
    const fs::path file = dir / manifest.at("labels_file").get<std::string>();
    const std::string text = read_file(file);
    if (manifest.contains("labels_checksum") && manifest.at("labels_checksum").get<std::string>() != checksum(text)) {
      throw Error(ErrorKind::ChecksumError, file.string() + ": checksum mismatch");
    }
    auto labels = read_labels(file);
    if (static_cast<Index>(labels.size()) != n) {
      throw Error(ErrorKind::ManifestMismatch, "labels file has " + std::to_string(labels.size()) +
                                                   " entries, manifest declares n = " + std::to_string(n));
    }
    bundle.labels = std::move(labels);
  }
  if (manifest.contains("extra")) bundle.extra = manifest.at("extra");
  return bundle;
}

NetworkBundle make_bundle(const SyntheticNetwork& net, const json& spec_echo) {
  NetworkBundle bundle;
  for (std::size_t i = 0; i < net.embeddings.size(); ++i) bundle.agent_names.push_back("agent_" + std::to_string(i));
  bundle.embeddings = net.stacked();
  bundle.families = net.true_families;
  bundle.labels = net.labels;
  bundle.extra = {{"generator", spec_echo}, {"true_supports", net.true_supports}};
  return bundle;
}

}  // namespace semsheaf
