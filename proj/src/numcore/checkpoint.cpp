#include "numcore/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

namespace vlnlab::num {

namespace {

void put_le_double(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_le_double(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i]))
            << (8 * i);
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

}  // namespace

void save_checkpoint(const ParameterStore& store, const std::string& path) {
  const auto names = store.names();
  if (names.empty())
    throw InvalidInputError("save_checkpoint: parameter store is empty");

  nlohmann::ordered_json header;
  header["format_version"] = kCheckpointFormatVersion;
  auto& params = header["params"] = nlohmann::ordered_json::array();
  std::string payload;
  for (const auto& name : names) {
    const Tensor& t = store.value(name);
    nlohmann::ordered_json entry;
    entry["name"] = name;
    entry["shape"] = {t.rows(), t.cols()};
    entry["byte_offset"] = payload.size();
    params.push_back(std::move(entry));
    for (double v : t.raw()) put_le_double(payload, v);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out << header.dump() << '\n' << payload;
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string header_line;
  if (!std::getline(in, header_line))
    throw CorruptionError("checkpoint missing header: " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError("checkpoint header is not valid JSON: " +
                          std::string(e.what()));
  }
  if (!header.contains("format_version") ||
      header["format_version"].get<int>() != kCheckpointFormatVersion)
    throw FormatError("checkpoint format_version mismatch in " + path);

  std::string payload((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());

  std::map<std::string, Tensor> out;
  for (const auto& entry : header.at("params")) {
    const std::string name = entry.at("name").get<std::string>();
    const auto shape = entry.at("shape").get<std::vector<int>>();
    if (shape.size() != 2)
      throw FormatError("checkpoint parameter " + name + " has bad shape");
    const std::size_t offset = entry.at("byte_offset").get<std::size_t>();
    const std::size_t count =
        static_cast<std::size_t>(shape[0]) * static_cast<std::size_t>(shape[1]);
    if (offset + count * 8 > payload.size())
      throw CorruptionError("checkpoint payload truncated for parameter " +
                            name);
    Tensor t(shape[0], shape[1]);
    for (std::size_t i = 0; i < count; ++i)
      t.raw()[i] = get_le_double(payload.data() + offset + i * 8);
    out.emplace(name, std::move(t));
  }
  return out;
}

}  // namespace vlnlab::num
