#include "jelly/binio.hpp"

#include <fstream>

namespace jelly::io {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), Errc::missing_file, "cannot open " + path.string());
  f.seekg(0, std::ios::end);
  auto n = f.tellg();
  f.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(n));
  if (n > 0) f.read(reinterpret_cast<char*>(buf.data()), n);
  require(f.good(), Errc::missing_file, "read failed for " + path.string());
  return buf;
}

void write_bytes(const std::filesystem::path& path, const std::uint8_t* data, std::size_t size) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), Errc::missing_file, "cannot create " + path.string());
  if (size > 0) f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
  f.flush();
  require(f.good(), Errc::missing_file, "write failed for " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_bytes(path, reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
}

std::string read_text(const std::filesystem::path& path) {
  auto bytes = read_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  auto text = read_text(path);
  nlohmann::json j = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  require(!j.is_discarded(), Errc::parse_error, "invalid JSON in " + path.string());
  return j;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace jelly::io
