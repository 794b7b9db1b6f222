#include "edgewatch/alerting.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>

namespace edgewatch {

AnomalyAlert make_alert(const AnomalyEvent& event, std::uint16_t node_id, std::uint32_t timestamp) {
  AnomalyAlert a;
  a.node_id = node_id;
  a.timestamp = timestamp;
  a.code = static_cast<std::uint8_t>(event.code);
  a.score_q = static_cast<std::uint8_t>(std::lround(std::clamp(event.score, 0.0, 1.0) * 255.0));
  const std::size_t n = std::min(event.track_ids.size(), kMaxAlertTracks);
  for (std::size_t i = 0; i < n; ++i) {
    a.track_ids.push_back(static_cast<std::uint16_t>(event.track_ids[i] & 0xFFFFu));
  }
  return a;
}

std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> data) {
  std::uint16_t crc = 0xFFFF;
  for (std::uint8_t byte : data) {
    crc ^= static_cast<std::uint16_t>(byte) << 8;
    for (int i = 0; i < 8; ++i) {
      crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                           : static_cast<std::uint16_t>(crc << 1);
    }
  }
  return crc;
}

std::vector<std::uint8_t> encode_alert(const AnomalyAlert& alert) {
  if (alert.code >= kAnomalyClassCount) {
    throw AlertEncodeError("alert code " + std::to_string(alert.code) + " out of range");
  }
  if (alert.track_ids.size() > kMaxAlertTracks) {
    throw AlertEncodeError("alert carries " + std::to_string(alert.track_ids.size()) +
                           " tracks, at most 15 fit");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kAlertHeaderSize + 2 * alert.track_ids.size() + 2);
  out.push_back(kAlertMagic);
  out.push_back(kAlertVersion);
  out.push_back(static_cast<std::uint8_t>(alert.node_id >> 8));
  out.push_back(static_cast<std::uint8_t>(alert.node_id));
  for (int shift = 24; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(alert.timestamp >> shift));
  }
  out.push_back(static_cast<std::uint8_t>((alert.code << 4) | alert.track_ids.size()));
  out.push_back(alert.score_q);
  for (std::uint16_t id : alert.track_ids) {
    out.push_back(static_cast<std::uint8_t>(id >> 8));
    out.push_back(static_cast<std::uint8_t>(id));
  }
  const std::uint16_t crc = crc16_ccitt_false(out);
  out.push_back(static_cast<std::uint8_t>(crc >> 8));
  out.push_back(static_cast<std::uint8_t>(crc));
  return out;
}

AnomalyAlert decode_alert(std::span<const std::uint8_t> frame) {
  using K = AlertDecodeErrorKind;
  if (frame.empty() || frame[0] != kAlertMagic) throw AlertDecodeError(K::kBadMagic, "bad magic");
  if (frame.size() < 2 || frame[1] != kAlertVersion) {
    throw AlertDecodeError(K::kBadVersion, "unsupported alert version");
  }
  if (frame.size() < kAlertHeaderSize + 2) {
    throw AlertDecodeError(K::kBadLength, "alert frame truncated");
  }
  const std::size_t count = frame[8] & 0x0F;
  if (frame.size() != kAlertHeaderSize + 2 * count + 2) {
    throw AlertDecodeError(K::kBadLength, "alert frame length does not match its track count");
  }
  const std::size_t body = frame.size() - 2;
  const auto expected = static_cast<std::uint16_t>((frame[body] << 8) | frame[body + 1]);
  if (crc16_ccitt_false(frame.first(body)) != expected) {
    throw AlertDecodeError(K::kBadCrc, "alert CRC mismatch");
  }
  AnomalyAlert a;
  a.node_id = static_cast<std::uint16_t>((frame[2] << 8) | frame[3]);
  a.timestamp = (static_cast<std::uint32_t>(frame[4]) << 24) |
                (static_cast<std::uint32_t>(frame[5]) << 16) |
                (static_cast<std::uint32_t>(frame[6]) << 8) | frame[7];
  a.code = frame[8] >> 4;
  if (a.code >= kAnomalyClassCount) throw AlertDecodeError(K::kBadCode, "alert code out of range");
  a.score_q = frame[9];
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = kAlertHeaderSize + 2 * i;
    a.track_ids.push_back(static_cast<std::uint16_t>((frame[at] << 8) | frame[at + 1]));
  }
  return a;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0F]);
  }
  return out;
}

std::vector<std::uint8_t> from_hex(const std::string& hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length hex string");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("invalid hex digit");
  };
  std::vector<std::uint8_t> out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    out.push_back(static_cast<std::uint8_t>((nibble(hex[i]) << 4) | nibble(hex[i + 1])));
  }
  return out;
}

FileSink::FileSink(std::string path) : path_(std::move(path)) {}

void FileSink::deliver(std::span<const std::uint8_t> frame) {
  const std::string line = to_hex(frame) + "\n";
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path_);
  out << line;
  out.flush();
  if (!out) throw std::runtime_error("write to " + path_ + " failed");
}

DatagramSink::DatagramSink(std::string host, std::uint16_t port)
    : host_(std::move(host)), port_(port) {}

DatagramSink::~DatagramSink() {
  if (fd_ >= 0) ::close(fd_);
}

std::string DatagramSink::name() const { return "udp:" + host_ + ":" + std::to_string(port_); }

void DatagramSink::deliver(std::span<const std::uint8_t> frame) {
  std::lock_guard lock(mutex_);
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(port_);
  if (const int rc = ::getaddrinfo(host_.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw std::runtime_error("cannot resolve " + host_ + ": " + ::gai_strerror(rc));
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, ::freeaddrinfo);
  if (fd_ < 0) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  }
  const ssize_t sent = ::sendto(fd_, frame.data(), frame.size(), 0, res->ai_addr, res->ai_addrlen);
  if (sent != static_cast<ssize_t>(frame.size())) {
    throw std::runtime_error(std::string("sendto: ") + std::strerror(errno));
  }
}

std::unique_ptr<AlertSink> make_sink(const std::string& spec) {
  if (spec.rfind("file:", 0) == 0 && spec.size() > 5) {
    return std::make_unique<FileSink>(spec.substr(5));
  }
  if (spec.rfind("udp:", 0) == 0) {
    const std::string rest = spec.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == rest.size()) {
      throw std::invalid_argument("udp sink must look like udp:<host>:<port>");
    }
    int port = 0;
    try {
      std::size_t used = 0;
      port = std::stoi(rest.substr(colon + 1), &used);
      if (used != rest.size() - colon - 1) throw std::invalid_argument(rest);
    } catch (const std::logic_error&) {
      throw std::invalid_argument("invalid udp port in sink '" + spec + "'");
    }
    if (port <= 0 || port > 65535) throw std::invalid_argument("udp port out of range: " + spec);
    return std::make_unique<DatagramSink>(rest.substr(0, colon), static_cast<std::uint16_t>(port));
  }
  throw std::invalid_argument("unknown sink '" + spec + "' (expected file:<path> or udp:<host>:<port>)");
}

bool DeliveryReport::all_ok() const {
  return std::all_of(results.begin(), results.end(), [](const SinkResult& r) { return r.ok; });
}

DeliveryReport dispatch(const AnomalyAlert& alert, std::span<const std::unique_ptr<AlertSink>> sinks) {
  DeliveryReport report;
  std::vector<std::uint8_t> frame;
  std::string encode_error;
  try {
    frame = encode_alert(alert);
  } catch (const std::exception& e) {
    encode_error = e.what();
  }
  for (const auto& sink : sinks) {
    SinkResult r{sink->name(), false, encode_error};
    if (encode_error.empty()) {
      try {
        sink->deliver(frame);
        r.ok = true;
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    }
    report.results.push_back(std::move(r));
  }
  return report;
}

}  // namespace edgewatch
