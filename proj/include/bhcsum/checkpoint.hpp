#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "bhcsum/autograd.hpp"
#include "bhcsum/errors.hpp"

namespace bhcsum {

// Single-file checkpoint container:
//   magic "BHCKPT01" | u64 config length | config JSON (UTF-8)
//   | u64 tensor count | per tensor: u64 name length, name,
//     u64 rows, u64 cols, rows*cols little-endian doubles.
// Round-trips bit-exactly.
struct Checkpoint {
    nlohmann::json config;
    std::map<std::string, Matrix> tensors;

    static constexpr const char* kMagic = "BHCKPT01";

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw DataError("cannot write checkpoint: " + path);
        out.write(kMagic, 8);
        const std::string cfg = config.dump();
        write_u64(out, cfg.size());
        out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
        write_u64(out, tensors.size());
        for (const auto& [name, tensor] : tensors) {
            write_u64(out, name.size());
            out.write(name.data(), static_cast<std::streamsize>(name.size()));
            write_u64(out, tensor.rows);
            write_u64(out, tensor.cols);
            for (double v : tensor.d) write_f64(out, v);
        }
        if (!out) throw DataError("short write on checkpoint: " + path);
    }

    static Checkpoint load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot open checkpoint: " + path);
        char magic[8];
        in.read(magic, 8);
        if (!in || std::memcmp(magic, kMagic, 8) != 0) {
            throw DataError("not a checkpoint file (bad magic): " + path);
        }
        Checkpoint ckpt;
        const std::uint64_t cfg_len = read_u64(in, path);
        std::string cfg(cfg_len, '\0');
        in.read(cfg.data(), static_cast<std::streamsize>(cfg_len));
        if (!in) throw DataError("truncated checkpoint config: " + path);
        ckpt.config = nlohmann::json::parse(cfg);
        const std::uint64_t count = read_u64(in, path);
        for (std::uint64_t t = 0; t < count; ++t) {
            const std::uint64_t name_len = read_u64(in, path);
            std::string name(name_len, '\0');
            in.read(name.data(), static_cast<std::streamsize>(name_len));
            const std::uint64_t rows = read_u64(in, path);
            const std::uint64_t cols = read_u64(in, path);
            Matrix m(rows, cols);
            for (auto& v : m.d) v = read_f64(in, path);
            if (!in) throw DataError("truncated checkpoint tensor: " + path);
            ckpt.tensors.emplace(std::move(name), std::move(m));
        }
        return ckpt;
    }

private:
    static void write_u64(std::ofstream& out, std::uint64_t v) {
        unsigned char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
        out.write(reinterpret_cast<const char*>(buf), 8);
    }

    static void write_f64(std::ofstream& out, double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        write_u64(out, bits);
    }

    static std::uint64_t read_u64(std::ifstream& in, const std::string& path) {
        unsigned char buf[8];
        in.read(reinterpret_cast<char*>(buf), 8);
        if (!in) throw DataError("truncated checkpoint: " + path);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
        return v;
    }

    static double read_f64(std::ifstream& in, const std::string& path) {
        const std::uint64_t bits = read_u64(in, path);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

}  // namespace bhcsum
