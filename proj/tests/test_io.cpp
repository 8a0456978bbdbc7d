#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "shockcal/io.hpp"
#include "shockcal/synth.hpp"

using namespace shockcal;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("shockcal_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<std::uint8_t> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

std::vector<SignalPair> small_pairs() {
    RigConfig cfg;
    cfg.n_pairs = 6;
    cfg.train_count = 4;
    cfg.master_seed = 3;
    return generate_dataset(cfg, LowEndModel{}).train;
}

}  // namespace

TEST_CASE("crc64 matches the XZ check value") {
    const char* s = "123456789";
    REQUIRE(crc64(reinterpret_cast<const std::uint8_t*>(s), 9) == 0x995DC9BBDF1939FAULL);

    // incremental update equals one-shot
    const auto part = crc64(reinterpret_cast<const std::uint8_t*>(s), 4);
    REQUIRE(crc64(reinterpret_cast<const std::uint8_t*>(s) + 4, 5, part) ==
            0x995DC9BBDF1939FAULL);
}

TEST_CASE("dataset files round-trip bit-exactly") {
    TempDir tmp;
    const auto pairs = small_pairs();
    const auto path = tmp.file("pairs.shkd");
    write_dataset_file(path, pairs);
    const auto loaded = read_dataset_file(path);

    REQUIRE(loaded.size() == pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        REQUIRE(loaded[i].low.samples == pairs[i].low.samples);
        REQUIRE(loaded[i].high.samples == pairs[i].high.samples);
        REQUIRE(loaded[i].low.sample_rate == pairs[i].low.sample_rate);
    }
}

TEST_CASE("dataset corruption and malformed files are rejected") {
    TempDir tmp;
    const auto pairs = small_pairs();
    const auto path = tmp.file("pairs.shkd");
    write_dataset_file(path, pairs);
    auto bytes = slurp(path);

    SECTION("payload corruption is caught by the checksum") {
        for (std::size_t offset : {std::size_t(40), bytes.size() / 2, bytes.size() - 9}) {
            auto corrupted = bytes;
            corrupted[offset] ^= 0x01;
            const auto bad = tmp.file("bad.shkd");
            dump(bad, corrupted);
            REQUIRE_THROWS_AS(read_dataset_file(bad), ChecksumMismatch);
        }
    }
    SECTION("bad magic") {
        auto corrupted = bytes;
        corrupted[0] = 'X';
        const auto bad = tmp.file("bad_magic.shkd");
        dump(bad, corrupted);
        REQUIRE_THROWS_AS(read_dataset_file(bad), IoError);
    }
    SECTION("truncated file") {
        auto truncated = bytes;
        truncated.resize(bytes.size() / 2);
        const auto bad = tmp.file("short.shkd");
        dump(bad, truncated);
        REQUIRE_THROWS_AS(read_dataset_file(bad), IoError);
    }
    SECTION("missing file") {
        REQUIRE_THROWS_AS(read_dataset_file(tmp.file("nope.shkd")), IoError);
    }
}

TEST_CASE("calibnet checkpoints round-trip bit-exactly") {
    TempDir tmp;
    AblationFlags flags;
    flags.use_linf_term = false;
    CalibModel m = make_calib_model(CalibDims::reduced(30, 8, 4), flags, 77);
    const auto path = tmp.file("model.shkm");
    save_checkpoint(path, m);

    REQUIRE(checkpoint_kind(path) == "calibnet");
    const CalibModel loaded = load_calib_checkpoint(path);
    REQUIRE(loaded.dims.signal_len == 30);
    REQUIRE(loaded.dims.latent == 8);
    REQUIRE(loaded.dims.z_compressed == 4);
    REQUIRE(loaded.flags.use_linf_term == false);
    REQUIRE(loaded.flags.ppn_uses_z == true);
    REQUIRE(loaded.peak_scale == m.peak_scale);
    REQUIRE(flatten(loaded.encoder) == flatten(m.encoder));
    REQUIRE(flatten(loaded.decoder) == flatten(m.decoder));
    REQUIRE(flatten(loaded.ppn_compress) == flatten(m.ppn_compress));
    REQUIRE(flatten(loaded.ppn_head) == flatten(m.ppn_head));

    SECTION("payload corruption is rejected") {
        auto bytes = slurp(path);
        bytes[bytes.size() - 20] ^= 0x40;
        const auto bad = tmp.file("bad.shkm");
        dump(bad, bytes);
        REQUIRE_THROWS_AS(load_calib_checkpoint(bad), ChecksumMismatch);
    }
    SECTION("kind mismatch is rejected") {
        REQUIRE_THROWS_AS(load_ae_checkpoint(path), IoError);
    }
}

TEST_CASE("autoencoder checkpoints round-trip") {
    TempDir tmp;
    CalibModel scratch = make_calib_model(CalibDims::reduced(30, 8, 4), {}, 78);
    AeModel ae;
    ae.dims = scratch.dims;
    ae.encoder = std::move(scratch.encoder);
    ae.decoder = std::move(scratch.decoder);

    const auto path = tmp.file("ae.shkm");
    save_checkpoint(path, ae);
    REQUIRE(checkpoint_kind(path) == "ae");
    const AeModel loaded = load_ae_checkpoint(path);
    REQUIRE(flatten(loaded.encoder) == flatten(ae.encoder));
    REQUIRE(flatten(loaded.decoder) == flatten(ae.decoder));
    REQUIRE_THROWS_AS(load_calib_checkpoint(path), IoError);
}
