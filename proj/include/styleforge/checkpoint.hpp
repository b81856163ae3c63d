#pragma once

// Checkpoint files: a text header (magic line, key=value config lines, an
// "arrays N" line) followed by N named arrays in little-endian binary32.
// Each array record is u32 name length, name bytes, u32 rank, u32 dims,
// then the row-major data.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include "styleforge/error.hpp"
#include "styleforge/model.hpp"
#include "styleforge/text.hpp"

namespace styleforge {

inline constexpr std::string_view kCheckpointMagic = "#styleforge-ckpt v1";

namespace detail {

inline void put_u32(std::ostream &out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                       static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

inline std::uint32_t get_u32(std::istream &in, const std::string &name) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char *>(b), 4)) throw Error(Errc::Format, name + ": truncated checkpoint");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_f32(std::ostream &out, float f) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    put_u32(out, u);
}

inline float get_f32(std::istream &in, const std::string &name) {
    const std::uint32_t u = get_u32(in, name);
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

template <typename T> void write_array(std::ostream &out, const std::string &name, const nn::Matrix<T> &m) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, 2);
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) put_f32(out, static_cast<float>(m.data()[i]));
}

} // namespace detail

struct CheckpointHeader {
    std::string kind; // "lm" or "encdec"
    std::string config_hash;
    ModelConfig config;
    bool decoder_causal = true;
};

template <typename T>
void write_checkpoint(std::ostream &out, const CheckpointHeader &h,
                      const std::vector<std::pair<std::string, const ParamSet<T> *>> &sets) {
    out << kCheckpointMagic << '\n';
    out << "kind=" << h.kind << '\n';
    out << "config_hash=" << h.config_hash << '\n';
    for (const auto &[k, v] : config_entries(h.config)) out << k << '=' << v << '\n';
    if (h.kind == "encdec") out << "decoder_causal=" << (h.decoder_causal ? 1 : 0) << '\n';
    std::size_t n = 0;
    for (const auto &s : sets) n += s.second->size();
    out << "arrays " << n << '\n';
    for (const auto &[prefix, set] : sets)
        for (std::size_t i = 0; i < set->size(); ++i) detail::write_array(out, prefix + set->name(i), set->value(i));
    if (!out) throw Error(Errc::Io, "failed writing checkpoint");
}

template <typename T>
void write_checkpoint(std::ostream &out, const ModelParams<T> &p, std::string_view config_hash = {}) {
    write_checkpoint<T>(out, {"lm", std::string(config_hash), p.config, true}, {{"", &p.arrays}});
}

template <typename T>
void write_checkpoint(std::ostream &out, const EncDecParams<T> &p, std::string_view config_hash = {}) {
    write_checkpoint<T>(out, {"encdec", std::string(config_hash), p.encoder.config, p.decoder_causal},
                        {{"encoder.", &p.encoder.arrays}, {"decoder.", &p.decoder.arrays}});
}

/// Everything a checkpoint holds, arrays still in file order.
template <typename T> struct CheckpointContents {
    CheckpointHeader header;
    ParamSet<T> arrays;
};

template <typename T> CheckpointContents<T> read_checkpoint(std::istream &in, const std::string &name = "<stream>") {
    std::string line;
    if (!std::getline(in, line) || line != kCheckpointMagic)
        throw Error(Errc::Format, name + ": not a styleforge checkpoint");
    CheckpointContents<T> c;
    std::size_t n_arrays = 0;
    bool have_count = false;
    while (std::getline(in, line)) {
        if (line.rfind("arrays ", 0) == 0) {
            n_arrays = detail::parse_size("arrays", line.substr(7));
            have_count = true;
            break;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(Errc::Format, name + ": malformed header line '" + line + "'");
        const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        try {
            if (key == "kind") c.header.kind = value;
            else if (key == "config_hash") c.header.config_hash = value;
            else if (key == "decoder_causal") c.header.decoder_causal = value == "1";
            else if (!apply_config_entry(c.header.config, key, value))
                throw Error(Errc::Format, name + ": unknown header key " + key);
        } catch (const Error &e) {
            if (e.code() == Errc::Config) throw Error(Errc::Format, name + ": " + e.what());
            throw;
        }
    }
    if (!have_count) throw Error(Errc::Format, name + ": missing array count");
    if (c.header.kind != "lm" && c.header.kind != "encdec")
        throw Error(Errc::Format, name + ": unknown checkpoint kind '" + c.header.kind + "'");
    for (std::size_t a = 0; a < n_arrays; ++a) {
        const auto len = detail::get_u32(in, name);
        if (len > 4096) throw Error(Errc::Format, name + ": implausible array name length");
        std::string aname(len, '\0');
        if (!in.read(aname.data(), len)) throw Error(Errc::Format, name + ": truncated checkpoint");
        const auto rank = detail::get_u32(in, name);
        if (rank != 2) throw Error(Errc::Format, name + ": array " + aname + " has rank " + std::to_string(rank));
        const auto rows = detail::get_u32(in, name);
        const auto cols = detail::get_u32(in, name);
        auto &m = c.arrays.add(aname, rows, cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            const float f = detail::get_f32(in, name);
            if (!std::isfinite(f)) throw Error(Errc::Format, name + ": non-finite value in " + aname);
            m.data()[i] = static_cast<T>(f);
        }
    }
    if (in.peek() != std::char_traits<char>::eof()) throw Error(Errc::Format, name + ": trailing bytes");
    return c;
}

namespace detail {

template <typename T>
ParamSet<T> take_prefixed(const ParamSet<T> &all, std::string_view prefix) {
    ParamSet<T> out;
    for (std::size_t i = 0; i < all.size(); ++i) {
        const auto &n = all.name(i);
        if (n.rfind(prefix, 0) == 0)
            out.add(n.substr(prefix.size()), static_cast<std::size_t>(all.value(i).rows()),
                    static_cast<std::size_t>(all.value(i).cols())) = all.value(i);
    }
    return out;
}

/// Compares names and shapes against a freshly initialized reference.
template <typename T> void check_layout(const ParamSet<T> &got, const ParamSet<T> &want, const std::string &name) {
    if (got.size() != want.size()) throw Error(Errc::Format, name + ": array count does not match the config");
    for (std::size_t i = 0; i < want.size(); ++i)
        if (got.name(i) != want.name(i) || got.value(i).rows() != want.value(i).rows() ||
            got.value(i).cols() != want.value(i).cols())
            throw Error(Errc::Format, name + ": array " + got.name(i) + " does not match the config");
}

} // namespace detail

template <typename T = float> ModelParams<T> read_lm_checkpoint(std::istream &in, const std::string &name = "<stream>") {
    auto c = read_checkpoint<T>(in, name);
    if (c.header.kind != "lm") throw Error(Errc::Format, name + ": expected a language-model checkpoint");
    c.header.config.validate();
    Rng rng(0);
    detail::check_layout(c.arrays, init_params<T>(c.header.config, rng).arrays, name);
    return {c.header.config, std::move(c.arrays)};
}

template <typename T = float>
EncDecParams<T> read_encdec_checkpoint(std::istream &in, const std::string &name = "<stream>") {
    auto c = read_checkpoint<T>(in, name);
    if (c.header.kind != "encdec") throw Error(Errc::Format, name + ": expected an encoder-decoder checkpoint");
    c.header.config.validate();
    Rng rng(0);
    const auto ref = cascade(init_params<T>(c.header.config, rng), rng);
    EncDecParams<T> p{{c.header.config, detail::take_prefixed(c.arrays, "encoder.")},
                      {c.header.config, detail::take_prefixed(c.arrays, "decoder.")},
                      c.header.decoder_causal};
    detail::check_layout(p.encoder.arrays, ref.encoder.arrays, name);
    detail::check_layout(p.decoder.arrays, ref.decoder.arrays, name);
    return p;
}

inline std::ofstream open_for_write(const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot open " + path + " for writing");
    return out;
}

inline std::ifstream open_for_read(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path);
    return in;
}

template <typename P> void save_checkpoint(const std::string &path, const P &params, std::string_view config_hash = {}) {
    auto out = open_for_write(path);
    write_checkpoint(out, params, config_hash);
}

/// Reads only the header kind, for dispatch.
inline std::string checkpoint_kind(const std::string &path) {
    auto in = open_for_read(path);
    std::string line;
    if (!std::getline(in, line) || line != kCheckpointMagic) throw Error(Errc::Format, path + ": not a styleforge checkpoint");
    while (std::getline(in, line) && line.rfind("arrays ", 0) != 0)
        if (line.rfind("kind=", 0) == 0) return line.substr(5);
    throw Error(Errc::Format, path + ": checkpoint has no kind");
}

template <typename T = float> ModelParams<T> load_lm_checkpoint(const std::string &path) {
    auto in = open_for_read(path);
    return read_lm_checkpoint<T>(in, path);
}

template <typename T = float> EncDecParams<T> load_encdec_checkpoint(const std::string &path) {
    auto in = open_for_read(path);
    return read_encdec_checkpoint<T>(in, path);
}

} // namespace styleforge
