#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgewatch/anomaly.hpp"

namespace edgewatch {

inline constexpr std::uint8_t kAlertMagic = 0xA7;
inline constexpr std::uint8_t kAlertVersion = 0x01;
inline constexpr std::size_t kAlertHeaderSize = 10;
inline constexpr std::size_t kMaxAlertTracks = 15;
inline constexpr std::size_t kMaxAlertFrameSize = 42;
inline constexpr std::size_t kRadioPayloadBudget = 51;

/// Radio alert record. Carries no image, descriptor or trajectory data.
struct AnomalyAlert {
  std::uint16_t node_id = 0;
  std::uint32_t timestamp = 0;  // seconds since epoch
  std::uint8_t code = 0;        // AnomalyCode, 0..5
  std::uint8_t score_q = 0;     // round(score * 255)
  std::vector<std::uint16_t> track_ids;

  bool operator==(const AnomalyAlert&) const = default;
};

/// Builds an alert from an event. Scores are clamped to [0, 1] before
/// quantisation; only the first 15 track ids are kept, truncated to 16 bits.
AnomalyAlert make_alert(const AnomalyEvent& event, std::uint16_t node_id, std::uint32_t timestamp);

/// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no xorout.
std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> data);

class AlertEncodeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Big-endian frame:
///   0xA7 | 0x01 | node_id:2 | timestamp:4 | code:4 bits, track_count:4 bits |
///   score_q | track_ids:2 each | crc16:2
/// 12 + 2 * track_count bytes. Throws AlertEncodeError for code > 5 or more
/// than 15 tracks.
std::vector<std::uint8_t> encode_alert(const AnomalyAlert& alert);

enum class AlertDecodeErrorKind { kBadMagic, kBadVersion, kBadLength, kBadCrc, kBadCode };

class AlertDecodeError : public std::runtime_error {
 public:
  AlertDecodeError(AlertDecodeErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  AlertDecodeErrorKind kind() const { return kind_; }

 private:
  AlertDecodeErrorKind kind_;
};

AnomalyAlert decode_alert(std::span<const std::uint8_t> frame);

std::string to_hex(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> from_hex(const std::string& hex);

class AlertSink {
 public:
  virtual ~AlertSink() = default;
  virtual std::string name() const = 0;
  /// Writes one frame atomically; throws on delivery failure.
  virtual void deliver(std::span<const std::uint8_t> frame) = 0;
};

/// Appends one upper-case hex line per frame.
class FileSink final : public AlertSink {
 public:
  explicit FileSink(std::string path);
  std::string name() const override { return "file:" + path_; }
  void deliver(std::span<const std::uint8_t> frame) override;

 private:
  std::string path_;
  std::mutex mutex_;
};

/// Sends one UDP datagram per frame to host:port (IPv4 literal or hostname).
class DatagramSink final : public AlertSink {
 public:
  DatagramSink(std::string host, std::uint16_t port);
  ~DatagramSink() override;
  DatagramSink(const DatagramSink&) = delete;
  DatagramSink& operator=(const DatagramSink&) = delete;

  std::string name() const override;
  void deliver(std::span<const std::uint8_t> frame) override;

 private:
  std::string host_;
  std::uint16_t port_;
  int fd_ = -1;
  std::mutex mutex_;
};

/// "file:<path>" or "udp:<host>:<port>". Throws std::invalid_argument.
std::unique_ptr<AlertSink> make_sink(const std::string& spec);

struct SinkResult {
  std::string sink;
  bool ok = false;
  std::string error;
};

struct DeliveryReport {
  std::vector<SinkResult> results;
  bool all_ok() const;
};

/// Encodes once and offers the frame to every sink; failures are recorded,
/// never thrown.
DeliveryReport dispatch(const AnomalyAlert& alert, std::span<const std::unique_ptr<AlertSink>> sinks);

}  // namespace edgewatch
