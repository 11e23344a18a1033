#include "droneaudio/wav.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace droneaudio {

namespace {

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

std::uint16_t get_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

// 44-byte canonical header: RIFF, fmt (16 bytes, PCM), data.
std::vector<unsigned char> make_header(std::uint16_t channels, std::uint32_t sample_rate,
                                       std::uint32_t data_bytes) {
    std::vector<unsigned char> h;
    h.reserve(44);
    h.insert(h.end(), {'R', 'I', 'F', 'F'});
    put_u32(h, 36 + data_bytes);
    h.insert(h.end(), {'W', 'A', 'V', 'E'});
    h.insert(h.end(), {'f', 'm', 't', ' '});
    put_u32(h, 16);
    put_u16(h, 1);  // integer PCM
    put_u16(h, channels);
    put_u32(h, sample_rate);
    put_u32(h, sample_rate * channels * 2u);  // byte rate
    put_u16(h, static_cast<std::uint16_t>(channels * 2u));
    put_u16(h, 16);
    h.insert(h.end(), {'d', 'a', 't', 'a'});
    put_u32(h, data_bytes);
    return h;
}

}  // namespace

AudioBuffer read_wav(const std::filesystem::path& path, WavReadStats* stats) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open WAV file: " + path.string());

    unsigned char riff[12];
    file.read(reinterpret_cast<char*>(riff), 12);
    if (file.gcount() != 12 || std::memcmp(riff, "RIFF", 4) != 0 ||
        std::memcmp(riff + 8, "WAVE", 4) != 0)
        throw std::runtime_error("not a RIFF/WAVE file: " + path.string());

    bool found_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    std::vector<std::int16_t> samples;
    std::uint32_t declared_data_bytes = 0;
    std::uint64_t recovered_bytes = 0;
    bool found_data = false;

    // Scan chunks; tolerate extras (LIST, fact, ...).
    while (true) {
        unsigned char chunk[8];
        file.read(reinterpret_cast<char*>(chunk), 8);
        if (file.gcount() != 8) break;
        const std::uint32_t size = get_u32(chunk + 4);

        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (size < 16) throw std::runtime_error("malformed fmt chunk: " + path.string());
            std::vector<unsigned char> fmt(size);
            file.read(reinterpret_cast<char*>(fmt.data()), size);
            if (file.gcount() != static_cast<std::streamsize>(size))
                throw std::runtime_error("truncated fmt chunk: " + path.string());
            format = get_u16(fmt.data());
            channels = get_u16(fmt.data() + 2);
            sample_rate = get_u32(fmt.data() + 4);
            bits = get_u16(fmt.data() + 14);
            found_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            if (!found_fmt) throw std::runtime_error("data chunk before fmt: " + path.string());
            if (format != 1 || bits != 16)
                throw std::runtime_error("unsupported WAV encoding (need 16-bit integer PCM): " +
                                         path.string());
            if (channels < 1 || channels > 8)
                throw std::runtime_error("unsupported channel count: " + path.string());
            declared_data_bytes = size;
            std::vector<char> raw(size);
            file.read(raw.data(), size);
            recovered_bytes = static_cast<std::uint64_t>(file.gcount());
            const std::size_t frame_bytes = channels * 2u;
            const std::uint64_t whole_frames = recovered_bytes / frame_bytes;
            samples.resize(whole_frames * channels);
            for (std::size_t i = 0; i < samples.size(); ++i)
                samples[i] = static_cast<std::int16_t>(
                    get_u16(reinterpret_cast<unsigned char*>(raw.data()) + i * 2));
            found_data = true;
            break;
        } else {
            file.seekg(size + (size & 1u), std::ios::cur);  // chunks are word-aligned
            if (!file) break;
        }
    }

    if (!found_fmt || !found_data)
        throw std::runtime_error("missing fmt or data chunk: " + path.string());

    const std::size_t frame_bytes = channels * 2u;
    if (stats) {
        stats->declared_frames = declared_data_bytes / frame_bytes;
        stats->recovered_frames = recovered_bytes / frame_bytes;
        stats->truncated = recovered_bytes < declared_data_bytes;
    }
    return deinterleave(samples, channels, static_cast<int>(sample_rate));
}

std::uint64_t write_wav(const AudioBuffer& buffer, const std::filesystem::path& path,
                        std::uint64_t* clipped) {
    if (buffer.channel_count() < 1 || buffer.channel_count() > 8)
        throw std::invalid_argument("write_wav: channel count must be 1..8");
    if (buffer.sample_rate <= 0) throw std::invalid_argument("write_wav: invalid sample rate");

    const std::vector<std::int16_t> interleaved = interleave_quantized(buffer, clipped);
    auto writer = WavStreamWriter::open_truncate(path,
                                                 static_cast<std::uint16_t>(buffer.channel_count()),
                                                 static_cast<std::uint32_t>(buffer.sample_rate));
    writer->append(interleaved);
    writer->finalize();
    return buffer.frames();
}

WavStreamWriter::WavStreamWriter(std::FILE* file, std::filesystem::path path,
                                 std::uint16_t channels, std::uint32_t sample_rate)
    : file_(file), path_(std::move(path)), channels_(channels), sample_rate_(sample_rate) {
    write_header(0);
}

std::unique_ptr<WavStreamWriter> WavStreamWriter::open_exclusive(
    const std::filesystem::path& path, std::uint16_t channels, std::uint32_t sample_rate) {
    std::FILE* f = std::fopen(path.string().c_str(), "wbx");
    if (!f) {
        if (errno == EEXIST) return nullptr;
        throw std::runtime_error("cannot create WAV file: " + path.string() + ": " +
                                 std::strerror(errno));
    }
    return std::unique_ptr<WavStreamWriter>(new WavStreamWriter(f, path, channels, sample_rate));
}

std::unique_ptr<WavStreamWriter> WavStreamWriter::open_truncate(
    const std::filesystem::path& path, std::uint16_t channels, std::uint32_t sample_rate) {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f)
        throw std::runtime_error("cannot create WAV file: " + path.string() + ": " +
                                 std::strerror(errno));
    return std::unique_ptr<WavStreamWriter>(new WavStreamWriter(f, path, channels, sample_rate));
}

WavStreamWriter::~WavStreamWriter() {
    try {
        finalize();
    } catch (...) {
        if (file_) std::fclose(file_);
        file_ = nullptr;
    }
}

void WavStreamWriter::write_header(std::uint32_t data_bytes) {
    const auto header = make_header(channels_, sample_rate_, data_bytes);
    if (std::fwrite(header.data(), 1, header.size(), file_) != header.size())
        throw std::runtime_error("WAV header write failed: " + path_.string());
}

void WavStreamWriter::append(std::span<const std::int16_t> samples) {
    if (finalized_) throw std::logic_error("append after finalize");
    if (samples.size() % channels_ != 0)
        throw std::invalid_argument("append: partial frame");
    std::vector<unsigned char> bytes(samples.size() * 2);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto u = static_cast<std::uint16_t>(samples[i]);
        bytes[i * 2] = static_cast<unsigned char>(u & 0xff);
        bytes[i * 2 + 1] = static_cast<unsigned char>((u >> 8) & 0xff);
    }
    if (std::fwrite(bytes.data(), 1, bytes.size(), file_) != bytes.size())
        throw std::runtime_error("WAV data write failed: " + path_.string());
    frames_written_ += samples.size() / channels_;
}

void WavStreamWriter::finalize() {
    if (finalized_ || !file_) return;
    const std::uint64_t data_bytes = frames_written_ * channels_ * 2u;
    if (std::fseek(file_, 0, SEEK_SET) != 0)
        throw std::runtime_error("WAV finalize seek failed: " + path_.string());
    write_header(static_cast<std::uint32_t>(data_bytes));
    if (std::fclose(file_) != 0) {
        file_ = nullptr;
        throw std::runtime_error("WAV close failed: " + path_.string());
    }
    file_ = nullptr;
    finalized_ = true;
}

}  // namespace droneaudio
