#include "tsgan/raster_codec.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "oracles.hpp"

namespace tsgan {
namespace {

TEST(Encode, EndpointsMidpointAndClamp) {
  const QuantizationSpec unit{0.0, 1.0, 256};
  EXPECT_EQ(encode(std::vector<double>{0.0, 1.0}, unit, 2, 1).pixels, (std::vector<std::uint8_t>{0, 255}));

  const auto half = encode(std::vector<double>(4, 0.5), unit, 2, 2);
  for (auto p : half.pixels) EXPECT_EQ(p, 128);

  EXPECT_EQ(encode(std::vector<double>{-5.0, 7.0}, unit, 1, 2).pixels, (std::vector<std::uint8_t>{0, 255}));
}

TEST(Encode, RejectsMismatchAndBadSpec) {
  EXPECT_THROW(encode(std::vector<double>(5, 0.0), {0.0, 1.0, 256}, 2, 2), ParameterError);
  EXPECT_THROW(encode(std::vector<double>(4, 0.0), {1.0, 1.0, 256}, 2, 2), ParameterError);
  EXPECT_THROW(encode(std::vector<double>(4, 0.0), {0.0, 1.0, 16}, 2, 2), ParameterError);
}

TEST(Decode, AllBlackAndAllWhite) {
  const QuantizationSpec spec{-1.0, 1.0, 256};
  for (double v : decode({3, 2, std::vector<std::uint8_t>(6, 0), spec})) EXPECT_EQ(v, -1.0);
  for (double v : decode({3, 2, std::vector<std::uint8_t>(6, 255), spec})) EXPECT_EQ(v, 1.0);
}

TEST(Codec, EveryLevelIsAFixedPoint) {
  const QuantizationSpec spec{-2.5, 3.75, 256};
  std::vector<std::uint8_t> all(256);
  std::iota(all.begin(), all.end(), 0);
  const RasterImage img{16, 16, all, spec};
  EXPECT_EQ(encode(decode(img), spec, 16, 16), img);
}

TEST(Codec, RoundTripWithinHalfStep) {
  std::mt19937_64 rng(11);
  const QuantizationSpec spec{-0.8, 1.3, 256};
  const double bound = (spec.hi - spec.lo) / 510.0;
  // Exhaustive over quantization cells: probe each cell's edges and centre.
  for (int p = 0; p < 256; ++p) {
    for (double off : {-0.5, -0.4999, 0.0, 0.4999}) {
      const double s = std::clamp(spec.lo + (p + off) * spec.step(), spec.lo, spec.hi);
      const double back = dequantize(quantize(s, spec), spec);
      EXPECT_LE(std::abs(back - s), bound * (1.0 + 1e-12));
    }
  }
  for (int trial = 0; trial < 200; ++trial) {
    const auto w = test::random_vector(64, rng, spec.lo, spec.hi);
    const auto back = decode(encode(w, spec, 8, 8));
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_LE(std::abs(back[i] - w[i]), bound * (1.0 + 1e-12));
  }
}

TEST(Codec, MonotoneAndOrderPreserving) {
  std::mt19937_64 rng(3);
  const QuantizationSpec spec{0.0, 10.0, 256};
  auto w = test::random_vector(1000, rng, -1.0, 11.0);
  std::sort(w.begin(), w.end());
  for (std::size_t i = 1; i < w.size(); ++i) EXPECT_LE(quantize(w[i - 1], spec), quantize(w[i], spec));

  // Row-major: sample i lands at (i / width, i % width).
  std::vector<double> ramp(12);
  for (std::size_t i = 0; i < 12; ++i) ramp[i] = static_cast<double>(i) * 10.0 / 11.0;
  const auto img = encode(ramp, spec, 4, 3);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(img.pixels[r * 4 + c], quantize(ramp[r * 4 + c], spec));
}

TEST(FitSpec, UsesDatasetExtremes) {
  WindowSet set{{{0.5, -2.0}, {3.0, 1.0}}, 2, 1.0, ""};
  const auto spec = fit_spec(set);
  EXPECT_EQ(spec.lo, -2.0);
  EXPECT_EQ(spec.hi, 3.0);
  WindowSet flat{{{1.0, 1.0}}, 2, 1.0, ""};
  EXPECT_LT(fit_spec(flat).lo, fit_spec(flat).hi);
}

class PgmFile : public ::testing::Test {
 protected:
  std::filesystem::path dir = test::scratch_dir("pgm");
};

TEST_F(PgmFile, RoundTripAndExactBytes) {
  const QuantizationSpec spec{0.0, 1.0, 256};
  const RasterImage img{2, 2, {0, 255, 128, 7}, spec};
  const auto path = (dir / "a.pgm").string();
  write_pgm(img, path);
  const std::string bytes = test::read_file(path);
  EXPECT_EQ(bytes.size(), 11u + 4u);
  EXPECT_EQ(bytes.substr(0, 11), "P5\n2 2\n255\n");
  EXPECT_EQ(read_pgm(path, spec), img);
}

TEST_F(PgmFile, FullSizeImageIsHeaderPlusRaster) {
  const RasterImage img{64, 64, std::vector<std::uint8_t>(4096, 9), {0.0, 1.0, 256}};
  const auto path = dir / "big.pgm";
  write_pgm(img, path.string());
  // "P5\n64 64\n255\n" is 3 + 6 + 4 = 13 bytes.
  EXPECT_EQ(std::string("P5\n64 64\n255\n").size(), 13u);
  EXPECT_EQ(std::filesystem::file_size(path), 13u + 4096u);
}

TEST_F(PgmFile, RejectsMalformedFiles) {
  const QuantizationSpec spec{0.0, 1.0, 256};
  test::write_file(dir / "ascii.pgm", "P2\n2 1\n255\n0 255\n");
  EXPECT_THROW(read_pgm((dir / "ascii.pgm").string(), spec), FormatError);
  test::write_file(dir / "short.pgm", std::string("P5\n2 2\n255\n") + std::string(3, '\x01'));
  EXPECT_THROW(read_pgm((dir / "short.pgm").string(), spec), FormatError);
  test::write_file(dir / "long.pgm", std::string("P5\n1 1\n255\n") + std::string(2, '\x01'));
  EXPECT_THROW(read_pgm((dir / "long.pgm").string(), spec), FormatError);
  test::write_file(dir / "maxval.pgm", std::string("P5\n1 1\n65535\n") + std::string(2, '\x01'));
  EXPECT_THROW(read_pgm((dir / "maxval.pgm").string(), spec), FormatError);
  EXPECT_THROW(read_pgm((dir / "none.pgm").string(), spec), IoError);
}

TEST_F(PgmFile, SpecSidecarRoundTripsExactly) {
  const QuantizationSpec spec{-0.1234567890123456789, 2.0 / 3.0, 256};
  const auto path = (dir / "data.spec").string();
  write_spec(spec, path);
  EXPECT_EQ(test::read_file(path).rfind("lo=", 0), 0u);
  EXPECT_EQ(read_spec(path), spec);
  test::write_file(dir / "bad.spec", "lo=1\nhi=0\nlevels=256\n");
  EXPECT_THROW(read_spec((dir / "bad.spec").string()), FormatError);
}

}  // namespace
}  // namespace tsgan
