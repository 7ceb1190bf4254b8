// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef IZT_CHECKPOINT_HPP_
#define IZT_CHECKPOINT_HPP_

#include <filesystem>
#include <map>
#include <string>

#include "izt/tensor.hpp"

namespace izt {

// Name -> tensor bundle.
//
// File layout (all integers little-endian):
//   magic "IZCKPT1"
//   u32 entry_count
//   manifest: entry_count times { u16 name_len, name bytes, u32 rank,
//                                 rank times u32 dim }
//   payloads: entry_count times float32 values, row-major, in manifest order
// Entries are stored in lexicographic name order so identical bundles
// serialize to identical bytes.
class Checkpoint {
 public:
  void put(const std::string& name, Tensor t) { entries_[name] = std::move(t); }
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const std::map<std::string, Tensor>& entries() const { return entries_; }

  // All entries whose name starts with `prefix` (e.g. "enc.").
  std::map<std::string, Tensor> with_prefix(const std::string& prefix) const;

  std::string serialize() const;
  static Checkpoint deserialize(const std::string& bytes, const std::string& context);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

 private:
  std::map<std::string, Tensor> entries_;
};

}  // namespace izt

#endif  // IZT_CHECKPOINT_HPP_
