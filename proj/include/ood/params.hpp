#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ood/tensor.hpp"

namespace ood {

// Named parameter tensors with paired gradients.
template <typename T>
struct ParamStore {
    struct Entry {
        std::string name;
        Tensor<T> value;
        Tensor<T> grad;
    };

    std::vector<Entry> entries;           // insertion order, deterministic iteration
    std::map<std::string, std::size_t> by_name;

    Tensor<T>& add(const std::string& name, std::vector<std::size_t> shape) {
        require(by_name.find(name) == by_name.end(), "param name not unique: " + name);
        by_name[name] = entries.size();
        entries.push_back({name, Tensor<T>(shape), Tensor<T>(shape)});
        return entries.back().value;
    }

    bool has(const std::string& name) const { return by_name.count(name) != 0; }

    Tensor<T>& value(const std::string& name) {
        auto it = by_name.find(name);
        require(it != by_name.end(), "unknown param: " + name);
        return entries[it->second].value;
    }
    const Tensor<T>& value(const std::string& name) const {
        auto it = by_name.find(name);
        require(it != by_name.end(), "unknown param: " + name);
        return entries[it->second].value;
    }
    Tensor<T>& grad(const std::string& name) {
        auto it = by_name.find(name);
        require(it != by_name.end(), "unknown param: " + name);
        return entries[it->second].grad;
    }

    void zero_grad() {
        for (auto& e : entries) e.grad.fill(T(0));
    }

    std::size_t num_params() const {
        std::size_t n = 0;
        for (const auto& e : entries) n += e.value.numel();
        return n;
    }

    template <typename U>
    ParamStore<U> cast() const {
        ParamStore<U> out;
        for (const auto& e : entries) {
            out.add(e.name, e.value.shape) = e.value.template cast<U>();
        }
        return out;
    }

    // Versioned checkpoint: (name, shape, values) triples.
    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["format"] = "ood-checkpoint";
        j["version"] = 1;
        auto params = nlohmann::ordered_json::array();
        for (const auto& e : entries) {
            nlohmann::ordered_json p;
            p["name"] = e.name;
            p["shape"] = e.value.shape;
            p["values"] = e.value.data;
            params.push_back(std::move(p));
        }
        j["params"] = std::move(params);
        return j;
    }

    static ParamStore from_json(const nlohmann::json& j) {
        require(j.value("format", "") == "ood-checkpoint", "checkpoint: bad format tag");
        require(j.value("version", 0) == 1, "checkpoint: unsupported version");
        ParamStore out;
        for (const auto& p : j.at("params")) {
            auto shape = p.at("shape").get<std::vector<std::size_t>>();
            auto& t = out.add(p.at("name").get<std::string>(), shape);
            auto vals = p.at("values").get<std::vector<double>>();
            require(vals.size() == t.numel(), "checkpoint: value count mismatch");
            for (std::size_t i = 0; i < vals.size(); ++i) t.data[i] = static_cast<T>(vals[i]);
        }
        return out;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        require(out.good(), "cannot open checkpoint for writing: " + path);
        out << to_json().dump(1) << "\n";
    }

    static ParamStore load(const std::string& path) {
        std::ifstream in(path);
        require(in.good(), "cannot open checkpoint: " + path);
        nlohmann::json j;
        in >> j;
        return from_json(j);
    }
};

}  // namespace ood
