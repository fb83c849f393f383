/* Copyright (c) 2026 The uvenet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#ifndef UVE_MODEL_CHECKPOINT_HPP_
#define UVE_MODEL_CHECKPOINT_HPP_

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "uve/model/network.hpp"

namespace uve {

// Single-file archive: 8-byte magic, little-endian u64 header length, JSON
// header (model config + tensor index + free-form meta), raw tensor payload.
// Writes go to a temp file and are renamed into place.

namespace ckpt {
inline constexpr char kMagic[8] = {'U', 'V', 'E', 'C', 'K', 'P', 'T', '1'};

template <typename T>
const char* dtype_name();
template <>
inline const char* dtype_name<float>() { return "f32"; }
template <>
inline const char* dtype_name<double>() { return "f64"; }
}  // namespace ckpt

template <typename T>
struct NamedTensors {
    std::vector<std::pair<std::string, const Tensor<T>*>> items;
    void add(const std::string& name, const Tensor<T>* t) { items.emplace_back(name, t); }
};

template <typename T>
inline void save_archive(const std::string& path, const ModelConfig& cfg,
                         const NamedTensors<T>& tensors, const nlohmann::json& meta = {}) {
    nlohmann::json header;
    header["format"] = 1;
    header["dtype"] = ckpt::dtype_name<T>();
    header["model_config"] = cfg.to_json();
    if (!meta.is_null()) header["meta"] = meta;
    nlohmann::json index = nlohmann::json::array();
    int64_t offset = 0;
    for (const auto& [name, t] : tensors.items) {
        const Shape s = t->shape();
        index.push_back({{"name", name},
                         {"shape", {s.n, s.c, s.h, s.w}},
                         {"offset", offset},
                         {"count", t->size()}});
        offset += t->size() * static_cast<int64_t>(sizeof(T));
    }
    header["tensors"] = index;
    const std::string hs = header.dump();

    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("checkpoint: cannot open " + tmp + " for writing");
        os.write(ckpt::kMagic, 8);
        const uint64_t hlen = hs.size();
        os.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
        os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
        for (const auto& [name, t] : tensors.items)
            os.write(reinterpret_cast<const char*>(t->data()),
                     static_cast<std::streamsize>(t->size() * sizeof(T)));
        if (!os) throw IoError("checkpoint: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

struct ArchiveEntry {
    Shape shape;
    int64_t offset = 0;
    int64_t count = 0;
};

struct ArchiveIndex {
    nlohmann::json header;
    std::string dtype;
    ModelConfig config;
    std::map<std::string, ArchiveEntry> entries;
    int64_t payload_start = 0;
    std::string path;
};

inline ArchiveIndex open_archive(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, ckpt::kMagic, 8) != 0)
        throw IoError("checkpoint: " + path + " is not a model archive (bad magic)");
    uint64_t hlen = 0;
    is.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    if (!is || hlen == 0 || hlen > (1ull << 30)) throw IoError("checkpoint: corrupt header length");
    std::string hs(hlen, '\0');
    is.read(hs.data(), static_cast<std::streamsize>(hlen));
    if (!is) throw IoError("checkpoint: truncated header");

    ArchiveIndex idx;
    idx.path = path;
    idx.header = nlohmann::json::parse(hs);
    idx.dtype = idx.header.at("dtype").get<std::string>();
    idx.config = ModelConfig::from_json(idx.header.at("model_config"));
    idx.payload_start = static_cast<int64_t>(8 + sizeof(uint64_t) + hlen);
    for (const auto& e : idx.header.at("tensors")) {
        ArchiveEntry ent;
        auto sh = e.at("shape");
        ent.shape = Shape{sh.at(0).get<int64_t>(), sh.at(1).get<int64_t>(), sh.at(2).get<int64_t>(),
                          sh.at(3).get<int64_t>()};
        ent.offset = e.at("offset").get<int64_t>();
        ent.count = e.at("count").get<int64_t>();
        idx.entries[e.at("name").get<std::string>()] = ent;
    }
    return idx;
}

template <typename T>
inline Tensor<T> read_archive_tensor(const ArchiveIndex& idx, const std::string& name) {
    auto it = idx.entries.find(name);
    if (it == idx.entries.end()) throw IoError("checkpoint: missing tensor '" + name + "'");
    const ArchiveEntry& ent = it->second;
    Tensor<T> out(ent.shape);
    std::ifstream is(idx.path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot reopen " + idx.path);

    auto read_as = [&](auto dummy) {
        using S = decltype(dummy);
        std::vector<S> buf(static_cast<std::size_t>(ent.count));
        is.seekg(idx.payload_start + ent.offset);
        is.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(S)));
        if (!is) throw IoError("checkpoint: truncated payload for '" + name + "'");
        for (int64_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>(buf[static_cast<std::size_t>(i)]);
    };
    if (idx.dtype == "f32")
        read_as(float{});
    else if (idx.dtype == "f64")
        read_as(double{});
    else
        throw IoError("checkpoint: unknown dtype '" + idx.dtype + "'");
    return out;
}

template <typename T>
inline void save_model(const std::string& path, UveNet<T>& model, const nlohmann::json& meta = {},
                       const NamedTensors<T>* extra = nullptr) {
    NamedTensors<T> all;
    for (auto& [name, var] : model.named_parameters()) all.add(name, &var->value());
    if (extra)
        for (auto& [name, t] : extra->items) all.add(name, t);
    save_archive(path, model.config(), all, meta);
}

// Builds the model declared by the stored config, then demands an exact
// match between its parameter set and the archived tensors.
template <typename T>
struct LoadedModel {
    std::unique_ptr<UveNet<T>> model;
    nlohmann::json meta;
    ArchiveIndex index;
};

template <typename T>
inline LoadedModel<T> load_model(const std::string& path) {
    LoadedModel<T> out;
    out.index = open_archive(path);
    out.meta = out.index.header.value("meta", nlohmann::json{});
    out.model = std::make_unique<UveNet<T>>(out.index.config, 0);
    for (auto& [name, var] : out.model->named_parameters()) {
        auto it = out.index.entries.find(name);
        if (it == out.index.entries.end())
            throw IoError("checkpoint: config declares parameter '" + name +
                          "' but the archive has no such tensor");
        if (!(it->second.shape == var->shape()))
            throw IoError("checkpoint: tensor '" + name + "' has shape " + it->second.shape.str() +
                          " but the config implies " + var->shape().str());
        var->value() = read_archive_tensor<T>(out.index, name);
    }
    return out;
}

}  // namespace uve

#endif  // UVE_MODEL_CHECKPOINT_HPP_
