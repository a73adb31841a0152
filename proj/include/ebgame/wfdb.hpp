#pragma once

// Readers for the MIT-BIH record triplet:
//   <record>.hea  text header
//   <record>.dat  format-212 packed samples
//   <record>.atr  MIT annotation stream
// plus the format-212 encoder used by tests and fixtures.

#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ebgame/errors.hpp"

namespace ebgame::wfdb {

struct SignalSpec {
  std::string file_name;
  int format = 0;
  double gain = 200.0;  // adu per mV
  int baseline = 0;     // adu
  std::string units = "mV";
  int adc_resolution = 0;
  int adc_zero = 0;
  int initial_value = 0;
  int checksum = 0;
  int block_size = 0;
  std::string description;
};

struct RecordHeader {
  std::string record_name;
  std::size_t num_signals = 0;
  double sampling_frequency = 250.0;
  std::size_t num_samples = 0;
  std::vector<SignalSpec> signals;
};

inline constexpr int kSampleMin = -2048;
inline constexpr int kSampleMax = 2047;

// channels[c][t]: sample t of channel c, in adu.
struct SignalFrame {
  std::vector<std::vector<int>> channels;

  std::size_t num_channels() const { return channels.size(); }
  std::size_t num_samples() const { return channels.empty() ? 0 : channels.front().size(); }
  friend bool operator==(const SignalFrame&, const SignalFrame&) = default;
};

struct Annotation {
  std::uint64_t sample_index = 0;
  int code = 0;
  int subtype = 0;
  int chan = 0;
  int num = 0;
  std::optional<std::string> aux;
  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct AnnotationStream {
  std::vector<Annotation> annotations;
  // Bytes followed the end-of-stream word and were ignored.
  bool trailing_bytes = false;
};

struct Record {
  RecordHeader header;
  SignalFrame signal;
  std::vector<Annotation> annotations;
};

// Annotation code <-> symbol, MIT-BIH convention. Code 0 (end of stream) and
// unassigned codes map to the empty string.
inline std::string_view code_symbol(int code) {
  static constexpr std::array<std::string_view, 50> table = {
      "",  "N", "L", "R", "a", "V", "F", "J", "A", "S", "E", "j", "/", "Q", "~", "",  "|",
      "",  "s", "T", "*", "D", "\"", "=", "p", "B", "^", "t", "+", "u", "?", "!", "[", "]",
      "e", "n", "@", "x", "f", "(", ")", "r", "",  "",  "",  "",  "",  "",  "",  ""};
  if (code < 0 || code >= static_cast<int>(table.size())) return "";
  return table[static_cast<std::size_t>(code)];
}

inline std::optional<int> symbol_code(std::string_view symbol) {
  for (int c = 1; c < 50; ++c) {
    if (!symbol.empty() && code_symbol(c) == symbol) return c;
  }
  return std::nullopt;
}

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

inline long parse_long(const std::string& tok, std::size_t line, const char* what) {
  try {
    std::size_t used = 0;
    const long v = std::stol(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("invalid ") + what + " '" + tok + "'", line);
  }
}

inline double parse_double(const std::string& tok, std::size_t line, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("invalid ") + what + " '" + tok + "'", line);
  }
}

// Leading integer of a token such as "212", "212x2" or "212:3+10".
inline long leading_int(const std::string& tok, std::size_t line, const char* what) {
  std::size_t end = 0;
  while (end < tok.size() && (std::isdigit(static_cast<unsigned char>(tok[end])) || (end == 0 && tok[end] == '-'))) ++end;
  return parse_long(tok.substr(0, end), line, what);
}

}  // namespace detail

/// Parses a single-segment WFDB header.
///
/// Record line: `name[/segs] nsig [fs[/counter][(base)] [nsamp [time [date]]]]`.
/// Signal line: `file format[xN][:skew][+offset] [gain[(baseline)][/units]
/// [adcres [adczero [initval [checksum [blocksize [description...]]]]]]]`.
/// Blank lines and lines starting with '#' are skipped.
inline RecordHeader parse_header(const std::string& text) {
  if (text.empty()) throw ParseError("empty header");
  std::istringstream in(text);
  RecordHeader h;
  bool have_record = false;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto tok = detail::split_ws(line);
    if (!have_record) {
      if (tok.size() < 2) throw ParseError("record line needs at least a name and signal count", line_no);
      const auto slash = tok[0].find('/');
      if (slash != std::string::npos) throw ParseError("multi-segment records are not supported", line_no);
      h.record_name = tok[0];
      const long nsig = detail::parse_long(tok[1], line_no, "signal count");
      if (nsig < 0) throw ParseError("negative signal count", line_no);
      h.num_signals = static_cast<std::size_t>(nsig);
      if (tok.size() > 2) {
        std::string fs = tok[2];
        fs = fs.substr(0, fs.find_first_of("/("));
        h.sampling_frequency = detail::parse_double(fs, line_no, "sampling frequency");
        if (!(h.sampling_frequency > 0.0)) throw ParseError("sampling frequency must be positive", line_no);
      }
      if (tok.size() > 3) {
        const long n = detail::parse_long(tok[3], line_no, "sample count");
        if (n < 0) throw ParseError("negative sample count", line_no);
        h.num_samples = static_cast<std::size_t>(n);
      }
      have_record = true;
      continue;
    }
    if (h.signals.size() == h.num_signals) {
      throw ParseError("more signal lines than the declared " + std::to_string(h.num_signals), line_no);
    }
    if (tok.size() < 2) throw ParseError("signal line needs a file name and format", line_no);
    SignalSpec s;
    s.file_name = tok[0];
    s.format = static_cast<int>(detail::leading_int(tok[1], line_no, "format"));
    if (tok.size() > 2) {
      std::string g = tok[2];
      if (const auto u = g.find('/'); u != std::string::npos) {
        s.units = g.substr(u + 1);
        g = g.substr(0, u);
      }
      std::optional<int> baseline;
      if (const auto p = g.find('('); p != std::string::npos) {
        const auto close = g.find(')', p);
        if (close == std::string::npos) throw ParseError("unterminated baseline in gain field", line_no);
        baseline = static_cast<int>(detail::parse_long(g.substr(p + 1, close - p - 1), line_no, "baseline"));
        g = g.substr(0, p);
      }
      s.gain = detail::parse_double(g, line_no, "gain");
      if (s.gain == 0.0) s.gain = 200.0;
      if (tok.size() > 3) s.adc_resolution = static_cast<int>(detail::parse_long(tok[3], line_no, "adc resolution"));
      if (tok.size() > 4) s.adc_zero = static_cast<int>(detail::parse_long(tok[4], line_no, "adc zero"));
      if (tok.size() > 5) s.initial_value = static_cast<int>(detail::parse_long(tok[5], line_no, "initial value"));
      if (tok.size() > 6) s.checksum = static_cast<int>(detail::parse_long(tok[6], line_no, "checksum"));
      if (tok.size() > 7) s.block_size = static_cast<int>(detail::parse_long(tok[7], line_no, "block size"));
      for (std::size_t i = 8; i < tok.size(); ++i) {
        if (i > 8) s.description += ' ';
        s.description += tok[i];
      }
      s.baseline = baseline.value_or(s.adc_zero);
    }
    h.signals.push_back(std::move(s));
  }
  if (!have_record) throw ParseError("no record line found", line_no);
  if (h.signals.size() != h.num_signals) {
    throw ParseError("record declares " + std::to_string(h.num_signals) + " signals but " +
                         std::to_string(h.signals.size()) + " signal lines were found",
                     line_no);
  }
  return h;
}

inline std::size_t format212_byte_count(std::size_t total_samples) { return (total_samples * 3 + 1) / 2; }

/// Unpacks format-212 data: every 3 bytes hold two 12-bit two's-complement
/// samples, s1 = b0 | (b1 & 0x0F) << 8 and s2 = b2 | (b1 & 0xF0) << 4.
/// Samples are interleaved across channels.
inline SignalFrame decode_format212(std::span<const std::uint8_t> bytes, std::size_t num_samples,
                                    std::size_t num_channels) {
  const std::size_t total = num_samples * num_channels;
  const std::size_t need = format212_byte_count(total);
  if (bytes.size() < need) {
    throw ParseError("format 212 data truncated: expected " + std::to_string(need) + " bytes, got " +
                     std::to_string(bytes.size()));
  }
  auto sign12 = [](int v) { return v >= 0x800 ? v - 0x1000 : v; };
  SignalFrame frame;
  frame.channels.assign(num_channels, std::vector<int>(num_samples));
  for (std::size_t k = 0; k < total; ++k) {
    const std::size_t group = (k / 2) * 3;
    int v;
    if (k % 2 == 0) {
      v = bytes[group] | ((bytes[group + 1] & 0x0F) << 8);
    } else {
      v = bytes[group + 2] | ((bytes[group + 1] & 0xF0) << 4);
    }
    frame.channels[k % num_channels][k / num_channels] = sign12(v);
  }
  return frame;
}

inline std::vector<std::uint8_t> encode_format212(const SignalFrame& frame) {
  const std::size_t nch = frame.num_channels();
  const std::size_t n = frame.num_samples();
  for (const auto& ch : frame.channels) {
    if (ch.size() != n) throw ShapeError("encode_format212: channels differ in length");
    for (int v : ch) {
      if (v < kSampleMin || v > kSampleMax) {
        throw RangeError("encode_format212: sample " + std::to_string(v) + " outside 12-bit range");
      }
    }
  }
  const std::size_t total = n * nch;
  std::vector<std::uint8_t> out(format212_byte_count(total), 0);
  for (std::size_t k = 0; k < total; ++k) {
    const unsigned u = static_cast<unsigned>(frame.channels[k % nch][k / nch]) & 0xFFFu;
    const std::size_t group = (k / 2) * 3;
    if (k % 2 == 0) {
      out[group] = static_cast<std::uint8_t>(u & 0xFF);
      out[group + 1] = static_cast<std::uint8_t>((out[group + 1] & 0xF0) | (u >> 8));
    } else {
      out[group + 2] = static_cast<std::uint8_t>(u & 0xFF);
      out[group + 1] = static_cast<std::uint8_t>((out[group + 1] & 0x0F) | ((u >> 4) & 0xF0));
    }
  }
  return out;
}

// MIT annotation pseudo-codes.
inline constexpr int kSkip = 59;
inline constexpr int kNum = 60;
inline constexpr int kSub = 61;
inline constexpr int kChn = 62;
inline constexpr int kAux = 63;
inline constexpr int kMaxBeatCode = 49;

/// Decodes an MIT-format annotation stream.
///
/// Each 16-bit little-endian word carries a 6-bit code and a 10-bit value.
/// Codes 1-49 are annotations at (running time + value). SKIP adds the
/// following 32-bit interval (high 16-bit word first) to the running time.
/// SUB, CHN, NUM and AUX modify the annotation that precedes them; CHN and NUM
/// also carry over to later annotations. A zero word ends the stream.
inline AnnotationStream parse_annotations(std::span<const std::uint8_t> bytes) {
  AnnotationStream result;
  auto word_at = [&](std::size_t pos) -> unsigned {
    return static_cast<unsigned>(bytes[pos]) | (static_cast<unsigned>(bytes[pos + 1]) << 8);
  };
  std::int64_t time = 0;
  int chan = 0;
  int num = 0;
  std::size_t pos = 0;
  auto last = [&](const char* what) -> Annotation& {
    if (result.annotations.empty()) {
      throw ParseError(std::string(what) + " modifier before any annotation at byte " + std::to_string(pos));
    }
    return result.annotations.back();
  };
  while (pos < bytes.size()) {
    if (pos + 2 > bytes.size()) throw ParseError("annotation stream ends inside a word");
    const unsigned word = word_at(pos);
    const int code = static_cast<int>(word >> 10);
    const int value = static_cast<int>(word & 0x3FF);
    pos += 2;
    if (word == 0) {
      result.trailing_bytes = pos < bytes.size();
      return result;
    }
    switch (code) {
      case kSkip: {
        if (pos + 4 > bytes.size()) throw ParseError("SKIP interval runs past the end of the stream");
        const std::uint32_t hi = word_at(pos), lo = word_at(pos + 2);
        time += static_cast<std::int32_t>((hi << 16) | lo);
        pos += 4;
        const std::int64_t floor =
            result.annotations.empty() ? 0 : static_cast<std::int64_t>(result.annotations.back().sample_index);
        if (time < floor) throw ParseError("SKIP moves annotation time backwards");
        break;
      }
      case kNum:
        num = value >= 512 ? value - 1024 : value;
        last("NUM").num = num;
        break;
      case kSub:
        last("SUB").subtype = value;
        break;
      case kChn:
        chan = value;
        last("CHN").chan = chan;
        break;
      case kAux: {
        const std::size_t len = static_cast<std::size_t>(value);
        const std::size_t padded = len + (len & 1);
        if (pos + padded > bytes.size()) {
          throw ParseError("AUX payload of " + std::to_string(len) + " bytes overruns the stream");
        }
        last("AUX").aux = std::string(reinterpret_cast<const char*>(bytes.data() + pos), len);
        pos += padded;
        break;
      }
      default:
        time += value;
        // Code 0 with a nonzero interval and the unassigned codes 50-58 only
        // advance time.
        if (code >= 1 && code <= kMaxBeatCode) {
          Annotation a;
          a.sample_index = static_cast<std::uint64_t>(time);
          a.code = code;
          a.chan = chan;
          a.num = num;
          result.annotations.push_back(std::move(a));
        }
        break;
    }
  }
  return result;
}

/// Test/fixture writer: inverse of parse_annotations for streams made of
/// annotations, SKIP escapes for large gaps, and SUB/CHN/NUM/AUX modifiers.
inline std::vector<std::uint8_t> encode_annotations(const std::vector<Annotation>& anns) {
  std::vector<std::uint8_t> out;
  auto put = [&](unsigned word) {
    out.push_back(static_cast<std::uint8_t>(word & 0xFF));
    out.push_back(static_cast<std::uint8_t>(word >> 8));
  };
  std::uint64_t time = 0;
  int chan = 0, num = 0;
  for (const auto& a : anns) {
    if (a.code < 1 || a.code > kMaxBeatCode) throw RangeError("encode_annotations: invalid code");
    if (a.sample_index < time) throw ContractError("encode_annotations: times must be non-decreasing");
    std::uint64_t delta = a.sample_index - time;
    if (delta > 0x3FF) {
      const auto skip = static_cast<std::uint32_t>(delta);
      put(static_cast<unsigned>(kSkip) << 10);
      put(skip >> 16);
      put(skip & 0xFFFF);
      delta = 0;
    }
    put((static_cast<unsigned>(a.code) << 10) | static_cast<unsigned>(delta));
    time = a.sample_index;
    if (a.subtype != 0) put((static_cast<unsigned>(kSub) << 10) | (static_cast<unsigned>(a.subtype) & 0x3FF));
    if (a.chan != chan) {
      put((static_cast<unsigned>(kChn) << 10) | (static_cast<unsigned>(a.chan) & 0x3FF));
      chan = a.chan;
    }
    if (a.num != num) {
      put((static_cast<unsigned>(kNum) << 10) | (static_cast<unsigned>(a.num) & 0x3FF));
      num = a.num;
    }
    if (a.aux) {
      const auto len = a.aux->size();
      if (len > 0x3FF) throw RangeError("encode_annotations: aux too long");
      put((static_cast<unsigned>(kAux) << 10) | static_cast<unsigned>(len));
      out.insert(out.end(), a.aux->begin(), a.aux->end());
      if (len & 1) out.push_back(0);
    }
  }
  put(0);
  return out;
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Loads `<dir>/<name>.hea`, the format-212 signal file it names, and
/// `<dir>/<name>.atr`.
inline Record read_record(const std::filesystem::path& dir, const std::string& name) {
  Record rec;
  rec.header = parse_header(read_text(dir / (name + ".hea")));
  if (rec.header.signals.empty()) throw ParseError("record " + name + " has no signals");
  for (const auto& s : rec.header.signals) {
    if (s.format != 212) {
      throw ParseError("record " + name + ": unsupported format " + std::to_string(s.format) +
                       " (only format 212 is supported)");
    }
    if (s.file_name != rec.header.signals.front().file_name) {
      throw ParseError("record " + name + ": signals spread over several files are not supported");
    }
  }
  const auto bytes = read_bytes(dir / rec.header.signals.front().file_name);
  std::size_t n = rec.header.num_samples;
  if (n == 0) n = (bytes.size() * 2 / 3) / rec.header.num_signals;
  rec.signal = decode_format212(bytes, n, rec.header.num_signals);
  rec.annotations = parse_annotations(read_bytes(dir / (name + ".atr"))).annotations;
  return rec;
}

}  // namespace ebgame::wfdb
