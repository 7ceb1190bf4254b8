// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "izt/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "izt/io.hpp"

namespace izt {

namespace {
void append_u32(std::string& out, std::uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), 4);
}
void append_u16(std::string& out, std::uint16_t v) {
  out.append(reinterpret_cast<const char*>(&v), 2);
}

struct Cursor {
  const std::string& bytes;
  std::size_t pos = 0;
  std::string context;

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) throw std::runtime_error(context + ": truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v;
    std::memcpy(&v, bytes.data() + pos, 2);
    pos += 2;
    return v;
  }
  float f32() {
    need(4);
    float v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = bytes.substr(pos, n);
    pos += n;
    return s;
  }
};
}  // namespace

const Tensor& Checkpoint::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::runtime_error("checkpoint: missing entry " + name);
  return it->second;
}

std::map<std::string, Tensor> Checkpoint::with_prefix(const std::string& prefix) const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, t] : entries_)
    if (name.rfind(prefix, 0) == 0) out.emplace(name, t);
  return out;
}

std::string Checkpoint::serialize() const {
  std::string out = "IZCKPT1";
  append_u32(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [name, t] : entries_) {
    append_u16(out, static_cast<std::uint16_t>(name.size()));
    out += name;
    append_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) append_u32(out, static_cast<std::uint32_t>(d));
  }
  for (const auto& [name, t] : entries_) {
    (void)name;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const float f = static_cast<float>(t[i]);
      out.append(reinterpret_cast<const char*>(&f), 4);
    }
  }
  return out;
}

Checkpoint Checkpoint::deserialize(const std::string& bytes, const std::string& context) {
  Cursor c{bytes, 0, context};
  if (c.raw(7) != "IZCKPT1") throw std::runtime_error(context + ": bad checkpoint magic");
  const std::uint32_t count = c.u32();
  std::vector<std::pair<std::string, std::vector<std::size_t>>> manifest;
  manifest.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t name_len = c.u16();
    std::string name = c.raw(name_len);
    const std::uint32_t rank = c.u32();
    std::vector<std::size_t> shape(rank);
    for (std::uint32_t d = 0; d < rank; ++d) shape[d] = c.u32();
    manifest.emplace_back(std::move(name), std::move(shape));
  }
  Checkpoint ckpt;
  for (auto& [name, shape] : manifest) {
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = c.f32();
    ckpt.entries_.emplace(std::move(name), std::move(t));
  }
  return ckpt;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  atomic_write_file(path, serialize());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes, path.string());
}

}  // namespace izt
