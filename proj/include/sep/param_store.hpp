// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sep/tensor.hpp"

namespace sep {

/// Named learnable tensors, kept in insertion order so files and reports are
/// stable. Names are dotted paths ("fuse4.msgrb.expand.weight").
template <class T>
class ParamStore {
 public:
  void set(const std::string& name, Tensor<T> value) {
    if (auto it = index_.find(name); it != index_.end()) {
      entries_[it->second].second = std::move(value);
      return;
    }
    index_.emplace(name, entries_.size());
    entries_.emplace_back(name, std::move(value));
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const Tensor<T>& at(const std::string& name) const { return entries_[lookup(name)].second; }
  Tensor<T>& at(const std::string& name) { return entries_[lookup(name)].second; }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  /// Copies every entry of `other` in under `prefix + "."`.
  void merge(const std::string& prefix, const ParamStore& other) {
    for (const auto& [name, value] : other) set(prefix + "." + name, value);
  }

  /// Entries under `prefix + "."`, with the prefix stripped.
  ParamStore scoped(const std::string& prefix) const {
    ParamStore out;
    const std::string head = prefix + ".";
    for (const auto& [name, value] : entries_) {
      if (name.compare(0, head.size(), head) == 0) out.set(name.substr(head.size()), value);
    }
    return out;
  }

  /// Total scalar count across all entries.
  Index numel() const {
    Index total = 0;
    for (const auto& e : entries_) total += e.second.numel();
    return total;
  }

  template <class U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& [name, value] : entries_) out.set(name, value.template cast<U>());
    return out;
  }

 private:
  std::size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ArgumentError("no parameter named '" + name + "'");
    return it->second;
  }

  std::vector<std::pair<std::string, Tensor<T>>> entries_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace sep
