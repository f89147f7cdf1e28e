#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "semsheaf/core_model.hpp"
#include "semsheaf/synthetic_data.hpp"

namespace semsheaf {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr std::uint16_t kMatrixFormatVersion = 1;
inline constexpr int kBundleFormatVersion = 1;
inline constexpr std::size_t kMatrixHeaderBytes = 16;

/// SEMB matrix file: "SEMB", u16 version, u32 rows, u32 cols, 2 reserved
/// bytes, then row-major little-endian float64.
std::string encode_matrix(const Matrix& m);
Matrix decode_matrix(const std::string& bytes, const std::string& origin = "<memory>");

void write_matrix(const fs::path& path, const Matrix& m);
/// Throws FormatError on bad magic, version or length.
Matrix read_matrix(const fs::path& path);

/// FNV-1a 64-bit digest, formatted "fnv1a64:<16 hex digits>".
std::string checksum(const std::string& bytes);
std::string file_checksum(const fs::path& path);

std::string read_file(const fs::path& path);
/// Writes to a sibling temporary file, then renames over the target.
void write_file_atomic(const fs::path& path, const std::string& contents);
/// Canonical JSON text: sorted keys, two-space indent, trailing newline.
std::string dump_json(const json& j);
void write_json(const fs::path& path, const json& j);
json read_json(const fs::path& path);

struct NetworkBundle {
  std::vector<std::string> agent_names;
  StackedEmbeddings embeddings;
  std::optional<std::vector<int>> families;
  std::optional<std::vector<int>> labels;
  /// Free-form manifest fields (generator spec, planted truth).
  json extra = json::object();
};

/// Directory layout: manifest.json, one <name>.semb per agent, labels.txt.
void write_network(const fs::path& dir, const NetworkBundle& bundle);
/// Validates the manifest against every matrix file. Throws FormatError,
/// ChecksumError or ManifestMismatch.
NetworkBundle read_network(const fs::path& dir);

/// Bundle for a generated network; the spec and planted truth go into the
/// manifest.
NetworkBundle make_bundle(const SyntheticNetwork& net, const json& spec_echo);

std::vector<int> read_labels(const fs::path& path);
std::string format_labels(const std::vector<int>& labels);

}  // namespace semsheaf
