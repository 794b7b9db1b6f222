#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "edgewatch/alerting.hpp"
#include "oracles.hpp"

using namespace edgewatch;

namespace {

AnomalyAlert random_alert(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::uint32_t> u32;
  std::uniform_int_distribution<int> u16(0, 0xFFFF), u8(0, 255), code(0, 5), n(0, 15);
  AnomalyAlert a;
  a.node_id = static_cast<std::uint16_t>(u16(rng));
  a.timestamp = u32(rng);
  a.code = static_cast<std::uint8_t>(code(rng));
  a.score_q = static_cast<std::uint8_t>(u8(rng));
  const int count = n(rng);
  for (int i = 0; i < count; ++i) a.track_ids.push_back(static_cast<std::uint16_t>(u16(rng)));
  return a;
}

std::filesystem::path temp_file(const char* stem) {
  auto p = std::filesystem::temp_directory_path() / (std::string(stem) + "_" + std::to_string(::getpid()));
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST_CASE("CRC matches the table-driven reference and the check value") {
  const std::string check = "123456789";
  const std::vector<std::uint8_t> bytes(check.begin(), check.end());
  CHECK(crc16_ccitt_false(bytes) == 0x29B1);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> b(0, 255), len(0, 64);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::uint8_t> data(static_cast<std::size_t>(len(rng)));
    for (auto& x : data) x = static_cast<std::uint8_t>(b(rng));
    CHECK(crc16_ccitt_false(data) == oracle::crc16_table_driven(data));
  }
}

TEST_CASE("empty alert encodes to the reference 12-byte frame") {
  AnomalyAlert a;
  a.node_id = 1;
  const auto frame = encode_alert(a);
  REQUIRE(frame.size() == 12);
  const std::vector<std::uint8_t> header{0xA7, 0x01, 0x00, 0x01, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00};
  CHECK(std::vector<std::uint8_t>(frame.begin(), frame.begin() + 10) == header);
  const std::uint16_t crc = oracle::crc16_table_driven(header);
  CHECK(frame[10] == (crc >> 8));
  CHECK(frame[11] == (crc & 0xFF));
}

TEST_CASE("field layout is big-endian") {
  AnomalyAlert a;
  a.node_id = 0x1234;
  a.timestamp = 0xA1B2C3D4;
  a.code = 3;
  a.score_q = 0x80;
  a.track_ids = {0xBEEF, 7};
  const auto f = encode_alert(a);
  REQUIRE(f.size() == 16);
  CHECK(f[2] == 0x12);
  CHECK(f[3] == 0x34);
  CHECK(f[4] == 0xA1);
  CHECK(f[7] == 0xD4);
  CHECK(f[8] == 0x32);
  CHECK(f[9] == 0x80);
  CHECK(f[10] == 0xBE);
  CHECK(f[11] == 0xEF);
  CHECK(f[13] == 0x07);
}

TEST_CASE("track count limits") {
  AnomalyAlert a;
  a.track_ids.assign(15, 9);
  CHECK(encode_alert(a).size() == 42);
  a.track_ids.push_back(9);
  CHECK_THROWS_AS(encode_alert(a), AlertEncodeError);
  a.track_ids.clear();
  a.code = 6;
  CHECK_THROWS_AS(encode_alert(a), AlertEncodeError);
}

TEST_CASE("round trip over random alerts within the payload budget") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 10000; ++i) {
    const AnomalyAlert a = random_alert(rng);
    const auto f = encode_alert(a);
    REQUIRE(f.size() <= kRadioPayloadBudget);
    REQUIRE(f.size() == 12 + 2 * a.track_ids.size());
    REQUIRE(decode_alert(f) == a);
  }
}

TEST_CASE("every single-byte corruption is rejected") {
  std::mt19937_64 rng(3);
  for (int sample = 0; sample < 10; ++sample) {
    const auto f = encode_alert(random_alert(rng));
    for (std::size_t pos = 0; pos < f.size(); ++pos) {
      for (int delta = 1; delta < 256; ++delta) {
        auto bad = f;
        bad[pos] = static_cast<std::uint8_t>(bad[pos] ^ delta);
        CHECK_THROWS_AS(decode_alert(bad), AlertDecodeError);
      }
    }
  }
}

TEST_CASE("decode errors are distinct") {
  AnomalyAlert a;
  a.track_ids = {1, 2};
  const auto good = encode_alert(a);
  auto kind_of = [](std::vector<std::uint8_t> f) {
    try {
      decode_alert(f);
    } catch (const AlertDecodeError& e) {
      return static_cast<int>(e.kind());
    }
    return -1;
  };
  auto bad = good;
  bad[0] = 0x00;
  CHECK(kind_of(bad) == static_cast<int>(AlertDecodeErrorKind::kBadMagic));
  bad = good;
  bad[1] = 0x02;
  CHECK(kind_of(bad) == static_cast<int>(AlertDecodeErrorKind::kBadVersion));
  bad = good;
  bad.pop_back();
  CHECK(kind_of(bad) == static_cast<int>(AlertDecodeErrorKind::kBadLength));
  CHECK(kind_of({0xA7, 0x01}) == static_cast<int>(AlertDecodeErrorKind::kBadLength));
  bad = good;
  bad.back() ^= 0x01;
  CHECK(kind_of(bad) == static_cast<int>(AlertDecodeErrorKind::kBadCrc));

  // A code outside 0..5 with a valid CRC.
  bad = good;
  bad[8] = static_cast<std::uint8_t>((7 << 4) | 2);
  const std::uint16_t crc = oracle::crc16_table_driven(std::span(bad).first(bad.size() - 2));
  bad[bad.size() - 2] = static_cast<std::uint8_t>(crc >> 8);
  bad[bad.size() - 1] = static_cast<std::uint8_t>(crc & 0xFF);
  CHECK(kind_of(bad) == static_cast<int>(AlertDecodeErrorKind::kBadCode));
}

TEST_CASE("alerts built from events") {
  AnomalyEvent e{AnomalyCode::kGather, {}, 0, 10, 1.7};
  for (TrackId id = 1; id <= 20; ++id) e.track_ids.push_back(id + 0x10000);
  const AnomalyAlert a = make_alert(e, 9, 1234);
  CHECK(a.code == 4);
  CHECK(a.score_q == 255);
  REQUIRE(a.track_ids.size() == 15);
  CHECK(a.track_ids[0] == 1);
  e.score = 0.5;
  CHECK(make_alert(e, 9, 0).score_q == 128);
  e.score = -1;
  CHECK(make_alert(e, 9, 0).score_q == 0);
}

TEST_CASE("hex helpers") {
  const std::vector<std::uint8_t> b{0x00, 0xA7, 0xFF};
  CHECK(to_hex(b) == "00A7FF");
  CHECK(from_hex("00a7FF") == b);
  CHECK_THROWS(from_hex("0"));
  CHECK_THROWS(from_hex("zz"));
}

TEST_CASE("file sink appends one hex line per alert") {
  const auto path = temp_file("edgewatch_sink");
  std::vector<std::unique_ptr<AlertSink>> sinks;
  sinks.push_back(make_sink("file:" + path.string()));
  AnomalyAlert a;
  a.node_id = 1;
  CHECK(dispatch(a, sinks).all_ok());
  a.code = 2;
  CHECK(dispatch(a, sinks).all_ok());
  std::ifstream in(path);
  std::string l1, l2, l3;
  std::getline(in, l1);
  std::getline(in, l2);
  CHECK_FALSE(std::getline(in, l3));
  CHECK(from_hex(l1) == encode_alert(AnomalyAlert{1, 0, 0, 0, {}}));
  CHECK(decode_alert(from_hex(l2)).code == 2);
  std::filesystem::remove(path);
}

TEST_CASE("datagram sink delivers the exact frame to a loopback listener") {
  const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  REQUIRE(fd >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  REQUIRE(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
  socklen_t len = sizeof(addr);
  REQUIRE(::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) == 0);
  timeval tv{2, 0};
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));

  std::vector<std::unique_ptr<AlertSink>> sinks;
  sinks.push_back(make_sink("udp:127.0.0.1:" + std::to_string(ntohs(addr.sin_port))));
  AnomalyAlert a{5, 99, 1, 200, {3, 4}};
  const DeliveryReport r = dispatch(a, sinks);
  CHECK(r.all_ok());

  std::uint8_t buf[128];
  const ssize_t n = ::recv(fd, buf, sizeof(buf), 0);
  ::close(fd);
  REQUIRE(n > 0);
  CHECK(std::vector<std::uint8_t>(buf, buf + n) == encode_alert(a));
}

TEST_CASE("failing sinks are recorded without stopping the others") {
  const auto path = temp_file("edgewatch_sink_ok");
  std::vector<std::unique_ptr<AlertSink>> sinks;
  sinks.push_back(make_sink("udp:no-such-host.invalid:9"));
  sinks.push_back(make_sink("file:/nonexistent-dir/alerts.hex"));
  sinks.push_back(make_sink("file:" + path.string()));
  const DeliveryReport r = dispatch(AnomalyAlert{}, sinks);
  REQUIRE(r.results.size() == 3);
  CHECK_FALSE(r.results[0].ok);
  CHECK_FALSE(r.results[0].error.empty());
  CHECK_FALSE(r.results[1].ok);
  CHECK(r.results[2].ok);
  CHECK_FALSE(r.all_ok());
  CHECK(std::filesystem::file_size(path) == 25);
  std::filesystem::remove(path);
}

TEST_CASE("sink specs are validated") {
  CHECK_THROWS_AS(make_sink("tcp:1.2.3.4:5"), std::invalid_argument);
  CHECK_THROWS_AS(make_sink("udp:host"), std::invalid_argument);
  CHECK_THROWS_AS(make_sink("udp:host:99999"), std::invalid_argument);
  CHECK_THROWS_AS(make_sink("file:"), std::invalid_argument);
}
