#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vmirror/imageops.hpp"

namespace vmirror {

bool looks_like_png(std::span<const std::uint8_t> bytes);

// Decodes to 8-bit gray (1 channel) or RGB (3 channels); alpha is dropped.
Image8 decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const Image8& img);

Image8 read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image8& img);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
// Writes to a sibling temp file then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace vmirror
