#include "jelly/nnkit.hpp"

#include <json.hpp>

#include "jelly/binio.hpp"

namespace jelly::nn {

namespace {
constexpr const char* kModelFormat = "jelly-model";
constexpr int kModelVersion = 1;
}  // namespace

void save_model(const ModelParams& params, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = kModelFormat;
  manifest["format_version"] = kModelVersion;
  nlohmann::json tensors = nlohmann::json::array();
  std::vector<std::uint8_t> blob;
  std::uint64_t offset = 0;
  for (const auto& [name, t] : params) {  // std::map: lexicographic by name
    nlohmann::json e;
    e["name"] = name;
    e["shape"] = t.shape;
    e["dtype"] = "f32le";
    e["byte_offset"] = offset;
    tensors.push_back(std::move(e));
    for (Eigen::Index i = 0; i < t.size(); ++i) io::append_f32le(blob, t.data[i]);
    offset += static_cast<std::uint64_t>(t.size()) * 4;
  }
  manifest["tensors"] = std::move(tensors);
  io::write_json(dir / "model.json", manifest);
  io::write_bytes(dir / "weights.bin", blob.data(), blob.size());
}

ModelParams load_model(const std::filesystem::path& dir) {
  nlohmann::json manifest = io::read_json(dir / "model.json");
  require(manifest.is_object(), Errc::parse_error, "model.json: expected an object");
  require(manifest.value("format", "") == kModelFormat, Errc::version_mismatch,
          "model.json: not a model manifest");
  require(manifest.value("format_version", -1) == kModelVersion, Errc::version_mismatch,
          "model.json: unsupported format_version");
  require(manifest.contains("tensors") && manifest["tensors"].is_array(), Errc::parse_error,
          "model.json: missing tensors array");

  auto blob = io::read_bytes(dir / "weights.bin");
  ModelParams params;
  std::uint64_t offset = 0;
  for (const auto& e : manifest["tensors"]) {
    require(e.is_object() && e.contains("name") && e["name"].is_string(), Errc::parse_error,
            "model.json: tensor entry missing name");
    std::string name = e["name"].get<std::string>();
    require(!params.count(name), Errc::duplicate_name, "model.json: duplicate tensor " + name);
    require(e.value("dtype", "") == "f32le", Errc::unknown_dtype,
            "model.json: unsupported dtype for " + name);
    require(e.contains("shape") && e["shape"].is_array() && !e["shape"].empty(),
            Errc::parse_error, "model.json: bad shape for " + name);
    std::vector<Eigen::Index> shape;
    for (const auto& d : e["shape"]) {
      require(d.is_number_integer() && d.get<std::int64_t>() > 0, Errc::parse_error,
              "model.json: bad shape for " + name);
      shape.push_back(d.get<Eigen::Index>());
    }
    require(e.contains("byte_offset") && e["byte_offset"].is_number_integer(), Errc::parse_error,
            "model.json: missing byte_offset for " + name);
    require(e["byte_offset"].get<std::uint64_t>() == offset, Errc::offset_inconsistency,
            "model.json: byte_offset for " + name + " does not match running total");

    Tensor t = Tensor::zeros(shape);
    std::uint64_t need = static_cast<std::uint64_t>(t.size()) * 4;
    require(offset + need <= blob.size(), Errc::truncated_blob,
            "weights.bin: blob too short for " + name);
    for (Eigen::Index i = 0; i < t.size(); ++i)
      t.data[i] = io::decode_f32le(blob.data() + offset + static_cast<std::uint64_t>(i) * 4);
    offset += need;
    params.emplace(std::move(name), std::move(t));
  }
  require(offset == blob.size(), Errc::trailing_bytes,
          "weights.bin: blob has bytes beyond the manifest");
  return params;
}

}  // namespace jelly::nn
