// Checkpoint persistence: a JSON manifest (kind, hyperparameters, parameter
// shapes) plus one little-endian float32 weight blob covering all stores.
#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "cmt/dataset.hpp"
#include "cmt/nn.hpp"
#include "json.hpp"

namespace cmt {

constexpr int kCheckpointVersion = 1;

template <typename T>
void save_checkpoint(const std::string& dir, const std::string& kind,
                     const std::map<std::string, std::string>& meta, const StoreList<T>& stores) {
  ensure_dir(dir);
  nlohmann::ordered_json j;
  j["version"] = kCheckpointVersion;
  j["kind"] = kind;
  j["meta"] = meta;
  nlohmann::ordered_json jstores = nlohmann::ordered_json::array();
  std::vector<float> blob;
  for (const auto& [name, ps] : stores) {
    nlohmann::ordered_json js;
    js["name"] = name;
    js["offset"] = blob.size();
    nlohmann::ordered_json jparams = nlohmann::ordered_json::array();
    for (const auto& e : ps->entries) {
      nlohmann::ordered_json jp;
      jp["name"] = e.name;
      jp["rows"] = e.ref.rows;
      jp["cols"] = e.ref.cols;
      jparams.push_back(std::move(jp));
    }
    js["params"] = std::move(jparams);
    for (T v : ps->w) blob.push_back(float(v));
    jstores.push_back(std::move(js));
  }
  j["stores"] = std::move(jstores);
  j["total_floats"] = blob.size();
  write_text_file(dir + "/manifest.json", j.dump(2) + "\n");

  std::ofstream f(dir + "/weights.f32", std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + dir + "/weights.f32");
  f.write(reinterpret_cast<const char*>(blob.data()), std::streamsize(blob.size() * 4));
}

inline std::map<std::string, std::string> checkpoint_meta(const std::string& dir,
                                                          const std::string& expect_kind = "") {
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(read_text_file(dir + "/manifest.json"));
  if (!expect_kind.empty() && j.at("kind").get<std::string>() != expect_kind)
    throw std::runtime_error(dir + ": checkpoint kind is '" + j.at("kind").get<std::string>() +
                             "', expected '" + expect_kind + "'");
  std::map<std::string, std::string> meta;
  for (const auto& [k, v] : j.at("meta").items()) meta[k] = v.get<std::string>();
  return meta;
}

// The stores must already be built with matching architecture; names and
// shapes are verified entry by entry.
template <typename T>
void load_checkpoint(const std::string& dir, const std::string& kind, const StoreList<T>& stores) {
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(read_text_file(dir + "/manifest.json"));
  if (j.at("kind").get<std::string>() != kind)
    throw std::runtime_error(dir + ": checkpoint kind mismatch");
  std::ifstream f(dir + "/weights.f32", std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + dir + "/weights.f32");
  std::vector<float> blob(j.at("total_floats").get<size_t>());
  f.read(reinterpret_cast<char*>(blob.data()), std::streamsize(blob.size() * 4));
  if (!f) throw std::runtime_error(dir + ": weight blob truncated");

  const auto& jstores = j.at("stores");
  if (jstores.size() != stores.size()) throw std::runtime_error(dir + ": store count mismatch");
  for (size_t si = 0; si < stores.size(); ++si) {
    const auto& js = jstores[si];
    auto& [name, ps] = stores[si];
    if (js.at("name").get<std::string>() != name)
      throw std::runtime_error(dir + ": store name mismatch at index " + std::to_string(si));
    const auto& jparams = js.at("params");
    if (jparams.size() != ps->entries.size())
      throw std::runtime_error(dir + ": parameter count mismatch in store " + name);
    for (size_t pi = 0; pi < ps->entries.size(); ++pi) {
      const auto& e = ps->entries[pi];
      if (jparams[pi].at("name").get<std::string>() != e.name ||
          jparams[pi].at("rows").get<int>() != e.ref.rows ||
          jparams[pi].at("cols").get<int>() != e.ref.cols)
        throw std::runtime_error(dir + ": parameter mismatch for " + e.name + " in store " + name);
    }
    size_t off = js.at("offset").get<size_t>();
    if (off + ps->w.size() > blob.size()) throw std::runtime_error(dir + ": blob too small");
    for (size_t i = 0; i < ps->w.size(); ++i) ps->w[i] = T(blob[off + i]);
  }
}

}  // namespace cmt
