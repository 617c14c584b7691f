#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <random>

#include <unistd.h>

#include "whitekit/io.hpp"

using namespace whitekit;
namespace fs = std::filesystem;

namespace {

/// Matrix of float-representable values spanning many magnitudes.
Matrix random_float_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> mant(0.0, 1.0);
  std::uniform_int_distribution<int> expo(-30, 30);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = static_cast<float>(std::ldexp(mant(rng), expo(rng)));
  return m;
}

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / ("whitekit_io_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidMatrix;
}

}  // namespace

TEST(Fem1, ByteLayout) {
  const Matrix x(2, 3, {1.0, -2.0, 0.5, 0.0, 3.0, 1.0});
  const std::string bytes = encode_fem1(x, std::vector<Label>{7, 256});
  ASSERT_EQ(bytes.size(), 14u + 24u + 8u);
  const std::string header("FEM1\x01\x02\x00\x00\x00\x03\x00\x00\x00\x01", 14);
  EXPECT_EQ(bytes.substr(0, 14), header);
  EXPECT_EQ(bytes.substr(14, 4), std::string("\x00\x00\x80\x3f", 4));  // 1.0f
  EXPECT_EQ(bytes.substr(18, 4), std::string("\x00\x00\x00\xc0", 4));  // -2.0f
  EXPECT_EQ(bytes.substr(38, 4), std::string("\x07\x00\x00\x00", 4));
  EXPECT_EQ(bytes.substr(42, 4), std::string("\x00\x01\x00\x00", 4));
}

TEST(Fem1, WithoutLabels) {
  const std::string bytes = encode_fem1(Matrix(1, 1, 2.0), std::nullopt);
  EXPECT_EQ(bytes.size(), 18u);
  EXPECT_EQ(bytes[13], 0);
  const auto d = decode_fem1(bytes);
  EXPECT_FALSE(d.labels.has_value());
  EXPECT_EQ(d.features(0, 0), 2.0);
}

TEST(Fem1, RoundTripIsExact) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix x = random_float_matrix(17, 9, seed);
    std::vector<Label> y(17);
    for (std::size_t i = 0; i < 17; ++i) y[i] = static_cast<Label>(i * 977);
    const auto d = decode_fem1(encode_fem1(x, y));
    EXPECT_EQ(d.features, x);
    EXPECT_EQ(*d.labels, y);
  }
}

TEST(Fem1, Rejections) {
  const std::string good = encode_fem1(Matrix(2, 2, 1.0), std::vector<Label>{0, 1});
  auto with = [&](std::size_t pos, char c) {
    std::string b = good;
    b[pos] = c;
    return b;
  };
  EXPECT_EQ(kind_of([&] { decode_fem1(with(3, '2')); }), ErrorKind::MalformedFile);
  EXPECT_EQ(kind_of([&] { decode_fem1(with(4, 2)); }), ErrorKind::MalformedFile);
  EXPECT_EQ(kind_of([&] { decode_fem1(with(13, 2)); }), ErrorKind::MalformedFile);
  EXPECT_EQ(kind_of([&] { decode_fem1(with(5, 3)); }), ErrorKind::MalformedFile);
  EXPECT_EQ(kind_of([&] { decode_fem1(good.substr(0, good.size() - 1)); }), ErrorKind::MalformedFile);
  EXPECT_EQ(kind_of([&] { decode_fem1(good + "x"); }), ErrorKind::MalformedFile);
  EXPECT_EQ(kind_of([&] { decode_fem1(good.substr(0, 10)); }), ErrorKind::MalformedFile);
  EXPECT_EQ(kind_of([&] { decode_fem1(with(5, 0)); }), ErrorKind::MalformedFile);  // n = 0

  std::string nan_payload = good;
  const auto nan_bits = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
  std::memcpy(nan_payload.data() + 14, &nan_bits, 4);
  EXPECT_EQ(kind_of([&] { decode_fem1(nan_payload); }), ErrorKind::MalformedFile);
}

TEST(Csv, PlainNumbers) {
  const auto d = parse_csv("1,2,3\n4,5,6\n", false);
  EXPECT_EQ(d.features, Matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  EXPECT_FALSE(d.labels.has_value());
  EXPECT_TRUE(d.column_names.empty());
}

TEST(Csv, HeaderAndInlineLabels) {
  const auto d = parse_csv("a, b ,label\r\n0.5,-1e3,2\r\n\n1.25,7,0\r\n", true);
  EXPECT_EQ(d.column_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(d.features, Matrix(2, 2, {0.5, -1000.0, 1.25, 7.0}));
  EXPECT_EQ(*d.labels, (std::vector<Label>{2, 0}));
}

TEST(Csv, ValuesAreReadAtFloatPrecision) {
  const auto d = parse_csv("0.1\n0.2\n", false);
  EXPECT_EQ(d.features(0, 0), static_cast<double>(0.1f));
}

TEST(Csv, Rejections) {
  EXPECT_EQ(kind_of([] { parse_csv("1,2\n3\n", false); }), ErrorKind::MalformedFile);
  EXPECT_EQ(kind_of([] { parse_csv("1,2\n3,x\n", false); }), ErrorKind::MalformedFile);
  EXPECT_EQ(kind_of([] { parse_csv("h1,h2\n", false); }), ErrorKind::MalformedFile);
  EXPECT_EQ(kind_of([] { parse_csv("1,2\n3,-1\n", true); }), ErrorKind::MalformedFile);
  EXPECT_EQ(kind_of([] { parse_csv("1,nan\n", false); }), ErrorKind::MalformedFile);
  EXPECT_EQ(kind_of([] { parse_csv("1\n", true); }), ErrorKind::MalformedFile);
  EXPECT_EQ(kind_of([] { decode_embeddings("", false); }), ErrorKind::MalformedFile);
}

TEST(Csv, RoundTripThroughFem1IsExact) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix x = random_float_matrix(11, 6, 100 + seed);
    std::vector<Label> y(11, 3);
    const std::string csv = encode_csv(x, y);
    const auto from_csv = parse_csv(csv, true);
    EXPECT_EQ(from_csv.features, x);
    const auto from_fem = decode_fem1(encode_fem1(from_csv.features, from_csv.labels));
    EXPECT_EQ(encode_csv(from_fem.features, from_fem.labels), csv);
  }
}

TEST(Csv, HeaderIsPreservedOnWrite) {
  const auto d = parse_csv("x,y\n1,2\n", false);
  EXPECT_EQ(encode_embeddings(d, FileFormat::Csv), "x,y\n1,2\n");
}

TEST(Detection, MagicBytesSelectFem1) {
  const std::string fem = encode_fem1(Matrix(1, 2, 1.0), std::nullopt);
  EXPECT_EQ(decode_embeddings(fem, false).format, FileFormat::Fem1);
  EXPECT_EQ(decode_embeddings("1,2\n", false).format, FileFormat::Csv);
}

TEST(Storage, OverflowingValueIsRejected) {
  EXPECT_EQ(kind_of([] { encode_fem1(Matrix(1, 1, 1e300), std::nullopt); }),
            ErrorKind::MalformedFile);
}

TEST(Files, AtomicWriteAndLabels) {
  const fs::path dir = temp_dir();
  const fs::path target = dir / "out.bin";
  write_atomic(target, "hello");
  EXPECT_EQ(read_file(target), "hello");
  EXPECT_FALSE(fs::exists(dir / "out.bin.tmp"));

  const fs::path missing_dir = dir / "nope" / "out.bin";
  EXPECT_THROW(write_atomic(missing_dir, "x"), Error);
  EXPECT_FALSE(fs::exists(missing_dir));

  write_atomic(dir / "labels.txt", "3\n1\n\n4\n");
  EXPECT_EQ(read_label_file(dir / "labels.txt"), (std::vector<Label>{3, 1, 4}));
  write_atomic(dir / "bad_labels.txt", "3\nx\n");
  EXPECT_THROW(read_label_file(dir / "bad_labels.txt"), Error);
  EXPECT_THROW(load_embeddings(dir / "does_not_exist.fem1"), Error);
  fs::remove_all(dir);
}
