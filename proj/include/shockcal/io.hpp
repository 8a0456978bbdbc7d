// Binary file formats: "SHKD" datasets and "SHKM" model checkpoints.
// Little-endian throughout, f64 payloads, trailing CRC64 (XZ polynomial
// conventions). Round-trips are bit-exact; any payload corruption is
// rejected with ChecksumMismatch.
//
// Dataset layout:
//   "SHKD" | u32 version | f64 sample_rate | u32 pair_count
//   | u32 signal_length | payload (per pair: low samples then high
//   samples, f64) | u64 crc64(payload)
//
// Checkpoint layout:
//   "SHKM" | u32 version | u32 header_len | UTF-8 JSON architecture
//   descriptor | payload (flat f64 parameters in ParamSet order:
//   encoder, decoder, then PPN nets when present) | u64
//   crc64(header + payload)

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "shockcal/baselines.hpp"
#include "shockcal/calibnet.hpp"
#include "shockcal/errors.hpp"
#include "shockcal/signal.hpp"

namespace shockcal {

inline constexpr std::uint32_t kDatasetFormatVersion = 1;
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

// CRC-64/XZ: reflected poly 0xC96C5795D7870F42, init/xorout all-ones.
inline std::uint64_t crc64(const std::uint8_t* data, std::size_t size,
                           std::uint64_t seed = 0) {
    static const auto table = [] {
        std::array<std::uint64_t, 256> t{};
        for (std::uint64_t i = 0; i < 256; ++i) {
            std::uint64_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1) ? (c >> 1) ^ 0xC96C5795D7870F42ULL : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint64_t crc = ~seed;
    for (std::size_t i = 0; i < size; ++i)
        crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
    return ~crc;
}

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

struct ByteReader {
    const std::uint8_t* data = nullptr;
    std::size_t size = 0;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > size) throw IoError("file truncated");
    }
    std::uint32_t get_u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t get_u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    double get_f64() { return std::bit_cast<double>(get_u64()); }
};

inline std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure on " + path);
    return bytes;
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failure on " + path);
}

}  // namespace detail

// --- dataset files ----------------------------------------------------------

inline void write_dataset_file(const std::string& path, const std::vector<SignalPair>& pairs) {
    if (pairs.empty()) throw InvalidConfig("write_dataset_file: no pairs");
    const std::size_t len = pairs.front().low.size();
    const double rate = pairs.front().low.sample_rate;
    for (const auto& p : pairs)
        if (p.low.size() != len || p.high.size() != len || p.low.sample_rate != rate ||
            p.high.sample_rate != rate)
            throw InvalidConfig("write_dataset_file: pairs are not uniform");

    std::vector<std::uint8_t> payload;
    payload.reserve(pairs.size() * 2 * len * 8);
    for (const auto& p : pairs) {
        for (double v : p.low.samples) detail::put_f64(payload, v);
        for (double v : p.high.samples) detail::put_f64(payload, v);
    }

    std::vector<std::uint8_t> bytes;
    bytes.reserve(payload.size() + 32);
    bytes.insert(bytes.end(), {'S', 'H', 'K', 'D'});
    detail::put_u32(bytes, kDatasetFormatVersion);
    detail::put_f64(bytes, rate);
    detail::put_u32(bytes, static_cast<std::uint32_t>(pairs.size()));
    detail::put_u32(bytes, static_cast<std::uint32_t>(len));
    bytes.insert(bytes.end(), payload.begin(), payload.end());
    detail::put_u64(bytes, crc64(payload.data(), payload.size()));
    detail::write_file(path, bytes);
}

inline std::vector<SignalPair> read_dataset_file(const std::string& path) {
    const auto bytes = detail::read_file(path);
    detail::ByteReader r{bytes.data(), bytes.size()};
    r.need(4);
    if (std::memcmp(bytes.data(), "SHKD", 4) != 0)
        throw IoError(path + ": not a dataset file (bad magic)");
    r.pos = 4;
    if (r.get_u32() != kDatasetFormatVersion)
        throw IoError(path + ": unsupported dataset format version");
    const double rate = r.get_f64();
    const std::uint32_t pair_count = r.get_u32();
    const std::uint32_t len = r.get_u32();
    const std::size_t payload_size = static_cast<std::size_t>(pair_count) * 2 * len * 8;
    r.need(payload_size + 8);
    if (bytes.size() != r.pos + payload_size + 8)
        throw IoError(path + ": size does not match header");

    const std::uint64_t expected = crc64(bytes.data() + r.pos, payload_size);
    detail::ByteReader tail{bytes.data(), bytes.size(), r.pos + payload_size};
    if (tail.get_u64() != expected)
        throw ChecksumMismatch(path + ": dataset payload checksum mismatch");

    std::vector<SignalPair> pairs(pair_count);
    for (std::uint32_t i = 0; i < pair_count; ++i) {
        pairs[i].drop_id = static_cast<int>(i);
        pairs[i].low.sample_rate = rate;
        pairs[i].high.sample_rate = rate;
        pairs[i].low.samples.resize(len);
        pairs[i].high.samples.resize(len);
        for (std::uint32_t j = 0; j < len; ++j) pairs[i].low.samples[j] = r.get_f64();
        for (std::uint32_t j = 0; j < len; ++j) pairs[i].high.samples[j] = r.get_f64();
    }
    return pairs;
}

// --- checkpoint files -------------------------------------------------------

namespace detail {

inline nlohmann::json dims_to_json(const CalibDims& d) {
    return {{"signal_len", d.signal_len},     {"encoder_hidden", d.encoder_hidden},
            {"latent", d.latent},             {"decoder_hidden", d.decoder_hidden},
            {"z_compressed", d.z_compressed}, {"ppn_hidden", d.ppn_hidden}};
}

inline CalibDims dims_from_json(const nlohmann::json& j) {
    CalibDims d;
    d.signal_len = j.at("signal_len").get<int>();
    d.encoder_hidden = j.at("encoder_hidden").get<int>();
    d.latent = j.at("latent").get<int>();
    d.decoder_hidden = j.at("decoder_hidden").get<int>();
    d.z_compressed = j.at("z_compressed").get<int>();
    d.ppn_hidden = j.at("ppn_hidden").get<int>();
    return d;
}

inline void write_checkpoint_bytes(const std::string& path, const nlohmann::json& header,
                                   const std::vector<const ParamSet*>& nets) {
    const std::string header_str = header.dump();
    std::vector<std::uint8_t> body;
    body.insert(body.end(), header_str.begin(), header_str.end());
    for (const ParamSet* net : nets)
        for (double v : net->flat()) put_f64(body, v);

    std::vector<std::uint8_t> bytes;
    bytes.reserve(body.size() + 32);
    bytes.insert(bytes.end(), {'S', 'H', 'K', 'M'});
    put_u32(bytes, kCheckpointFormatVersion);
    put_u32(bytes, static_cast<std::uint32_t>(header_str.size()));
    bytes.insert(bytes.end(), body.begin(), body.end());
    put_u64(bytes, crc64(body.data(), body.size()));
    write_file(path, bytes);
}

struct CheckpointBody {
    nlohmann::json header;
    ByteReader params;  // positioned at the start of the parameter payload
    std::vector<std::uint8_t> bytes;
};

inline CheckpointBody read_checkpoint_bytes(const std::string& path) {
    CheckpointBody body;
    body.bytes = read_file(path);
    ByteReader r{body.bytes.data(), body.bytes.size()};
    r.need(4);
    if (std::memcmp(body.bytes.data(), "SHKM", 4) != 0)
        throw IoError(path + ": not a checkpoint file (bad magic)");
    r.pos = 4;
    if (r.get_u32() != kCheckpointFormatVersion)
        throw IoError(path + ": unsupported checkpoint format version");
    const std::uint32_t header_len = r.get_u32();
    r.need(header_len);
    if (body.bytes.size() < r.pos + header_len + 8)
        throw IoError(path + ": file truncated");

    const std::size_t body_size = body.bytes.size() - r.pos - 8;
    const std::uint64_t expected = crc64(body.bytes.data() + r.pos, body_size);
    ByteReader tail{body.bytes.data(), body.bytes.size(), r.pos + body_size};
    if (tail.get_u64() != expected)
        throw ChecksumMismatch(path + ": checkpoint checksum mismatch");

    const char* header_begin = reinterpret_cast<const char*>(body.bytes.data() + r.pos);
    try {
        body.header = nlohmann::json::parse(header_begin, header_begin + header_len);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": bad checkpoint header: " + e.what());
    }
    body.params = ByteReader{body.bytes.data(), body.bytes.size() - 8, r.pos + header_len};
    return body;
}

inline void load_net_params(ByteReader& r, ParamSet& net, const std::string& path,
                            const char* name) {
    if (r.pos + net.size() * 8 > r.size)
        throw IoError(path + ": parameter payload shorter than descriptor for " + name);
    for (double& v : net.flat()) v = r.get_f64();
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const CalibModel& m) {
    nlohmann::json header = {
        {"kind", "calibnet"},
        {"dims", detail::dims_to_json(m.dims)},
        {"flags",
         {{"ppn_uses_z", m.flags.ppn_uses_z},
          {"use_linf_term", m.flags.use_linf_term},
          {"ppn_residual", m.flags.ppn_residual}}},
        {"peak_scale", m.peak_scale},
        {"param_counts",
         {{"encoder", m.encoder.size()},
          {"decoder", m.decoder.size()},
          {"ppn_compress", m.ppn_compress.size()},
          {"ppn_head", m.ppn_head.size()}}},
    };
    detail::write_checkpoint_bytes(path, header,
                                   {&m.encoder, &m.decoder, &m.ppn_compress, &m.ppn_head});
}

inline void save_checkpoint(const std::string& path, const AeModel& m) {
    nlohmann::json header = {
        {"kind", "ae"},
        {"dims", detail::dims_to_json(m.dims)},
        {"use_linf_term", m.use_linf_term},
        {"param_counts", {{"encoder", m.encoder.size()}, {"decoder", m.decoder.size()}}},
    };
    detail::write_checkpoint_bytes(path, header, {&m.encoder, &m.decoder});
}

inline std::string checkpoint_kind(const std::string& path) {
    return detail::read_checkpoint_bytes(path).header.at("kind").get<std::string>();
}

inline CalibModel load_calib_checkpoint(const std::string& path) {
    auto body = detail::read_checkpoint_bytes(path);
    try {
        if (body.header.at("kind").get<std::string>() != "calibnet")
            throw IoError(path + ": checkpoint is not a calibnet model");
        CalibModel m;
        m.dims = detail::dims_from_json(body.header.at("dims"));
        const auto& flags = body.header.at("flags");
        m.flags.ppn_uses_z = flags.at("ppn_uses_z").get<bool>();
        m.flags.use_linf_term = flags.at("use_linf_term").get<bool>();
        m.flags.ppn_residual = flags.at("ppn_residual").get<bool>();
        m.peak_scale = body.header.at("peak_scale").get<double>();

        CalibModel shaped = make_calib_model(m.dims, m.flags, 0);
        m.encoder = std::move(shaped.encoder);
        m.decoder = std::move(shaped.decoder);
        m.ppn_compress = std::move(shaped.ppn_compress);
        m.ppn_head = std::move(shaped.ppn_head);
        const auto& counts = body.header.at("param_counts");
        if (counts.at("encoder").get<std::size_t>() != m.encoder.size() ||
            counts.at("decoder").get<std::size_t>() != m.decoder.size() ||
            counts.at("ppn_compress").get<std::size_t>() != m.ppn_compress.size() ||
            counts.at("ppn_head").get<std::size_t>() != m.ppn_head.size())
            throw IoError(path + ": parameter counts do not match architecture");
        detail::load_net_params(body.params, m.encoder, path, "encoder");
        detail::load_net_params(body.params, m.decoder, path, "decoder");
        detail::load_net_params(body.params, m.ppn_compress, path, "ppn_compress");
        detail::load_net_params(body.params, m.ppn_head, path, "ppn_head");
        if (body.params.pos != body.params.size)
            throw IoError(path + ": trailing bytes after parameters");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": bad checkpoint header: " + e.what());
    }
}

inline AeModel load_ae_checkpoint(const std::string& path) {
    auto body = detail::read_checkpoint_bytes(path);
    try {
        if (body.header.at("kind").get<std::string>() != "ae")
            throw IoError(path + ": checkpoint is not an autoencoder model");
        AeModel m;
        m.dims = detail::dims_from_json(body.header.at("dims"));
        m.use_linf_term = body.header.at("use_linf_term").get<bool>();
        CalibModel shaped = make_calib_model(m.dims, {}, 0);
        m.encoder = std::move(shaped.encoder);
        m.decoder = std::move(shaped.decoder);
        const auto& counts = body.header.at("param_counts");
        if (counts.at("encoder").get<std::size_t>() != m.encoder.size() ||
            counts.at("decoder").get<std::size_t>() != m.decoder.size())
            throw IoError(path + ": parameter counts do not match architecture");
        detail::load_net_params(body.params, m.encoder, path, "encoder");
        detail::load_net_params(body.params, m.decoder, path, "decoder");
        if (body.params.pos != body.params.size)
            throw IoError(path + ": trailing bytes after parameters");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": bad checkpoint header: " + e.what());
    }
}

}  // namespace shockcal
