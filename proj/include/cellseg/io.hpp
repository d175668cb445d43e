#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cellseg/image.hpp"
#include "cellseg/region_table.hpp"

namespace cellseg {

struct LoadOptions {
    // Four-channel inputs are rejected unless this is set, in which case the
    // fourth channel is dropped.
    bool strip_alpha = false;
};

/// Reads an 8- or 16-bit, 1- or 3-channel PNG or TIFF into a normalized RgbImage.
/// Single-channel data is replicated into R, G and B.
RgbImage load_image(const std::filesystem::path& path, const LoadOptions& opts = {});

/// Same as load_image but from an in-memory file; format is sniffed from magic bytes.
RgbImage decode_image(std::span<const std::uint8_t> bytes, const LoadOptions& opts = {});

/// True when the bytes start with a PNG or TIFF signature.
bool looks_like_image(std::span<const std::uint8_t> bytes);

/// 16-bit grayscale PNG whose pixel values are the labels.
void save_label_matrix(const LabelMatrix& lm, const std::filesystem::path& path);
LabelMatrix load_label_matrix(const std::filesystem::path& path);

/// Writes an RgbImage at its source bit depth (8 or 16). 8-bit data written this way
/// reloads bit-exactly.
void save_image(const RgbImage& img, const std::filesystem::path& path);

/// 8-bit renders used for step images and overlays.
std::vector<std::uint8_t> encode_png(const GrayImage& img);
std::vector<std::uint8_t> encode_png(const RgbImage& img);
void save_png(const GrayImage& img, const std::filesystem::path& path);
void save_png(const RgbImage& img, const std::filesystem::path& path);

/// CSV with header label,centroid_x,centroid_y,area,mean_R,mean_G,mean_B,f_value,state.
/// Reals are written in shortest round-trip form; an absent f_value is an empty field
/// and an unclassified state is written as "unclassified".
std::string region_table_csv(const RegionTable& rt);
void export_region_table(const RegionTable& rt, const std::filesystem::path& path);
RegionTable parse_region_table(const std::string& csv);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_binary_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Shortest decimal representation that parses back to the same double.
std::string format_real(double v);

}  // namespace cellseg
