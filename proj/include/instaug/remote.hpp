#pragma once

#include <openssl/evp.h>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <utility>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "instaug/backend.hpp"
#include "instaug/error.hpp"
#include "instaug/image.hpp"
#include "instaug/png_io.hpp"
#include "instaug/scene.hpp"

namespace instaug {

// ---------------------------------------------------------------------------
// Byte-level helpers
// ---------------------------------------------------------------------------

inline std::string base64_encode(std::string_view in) {
    static constexpr char alphabet[] =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((in.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= in.size(); i += 3) {
        const std::uint32_t v = (static_cast<unsigned char>(in[i]) << 16) |
                                (static_cast<unsigned char>(in[i + 1]) << 8) |
                                static_cast<unsigned char>(in[i + 2]);
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out.push_back(alphabet[v & 63]);
    }
    if (i + 1 == in.size()) {
        const std::uint32_t v = static_cast<unsigned char>(in[i]) << 16;
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out += "==";
    } else if (i + 2 == in.size()) {
        const std::uint32_t v = (static_cast<unsigned char>(in[i]) << 16) |
                                (static_cast<unsigned char>(in[i + 1]) << 8);
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

inline std::string base64_decode(std::string_view in) {
    const auto value = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    if (in.size() % 4 != 0) throw ProtocolError("base64 payload length is not a multiple of 4");
    std::string out;
    out.reserve(in.size() / 4 * 3);
    for (std::size_t i = 0; i < in.size(); i += 4) {
        int vals[4];
        int pad = 0;
        for (int j = 0; j < 4; ++j) {
            const char c = in[i + j];
            if (c == '=') {
                if (i + 4 != in.size() || j < 2) throw ProtocolError("misplaced base64 padding");
                vals[j] = 0;
                ++pad;
            } else {
                if (pad) throw ProtocolError("base64 data after padding");
                vals[j] = value(c);
                if (vals[j] < 0) throw ProtocolError("invalid base64 character");
            }
        }
        const std::uint32_t v = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
        out.push_back(static_cast<char>((v >> 16) & 0xff));
        if (pad < 2) out.push_back(static_cast<char>((v >> 8) & 0xff));
        if (pad < 1) out.push_back(static_cast<char>(v & 0xff));
    }
    return out;
}

inline std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr)) {
        throw Error("sha256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Payload encoding. Small images travel inline as base64 PNG; anything above
// the limit is written once to a shared blob directory under its content
// hash and referenced by path.
// ---------------------------------------------------------------------------

struct RemoteConfig {
    std::string base_url;             // e.g. http://127.0.0.1:8080
    int retries = 3;                  // total transport attempts
    std::chrono::milliseconds initial_backoff{100};
    std::size_t inline_limit = 1 << 20;
    std::filesystem::path blob_dir;   // empty: always inline
    std::chrono::seconds timeout{30};
    int max_in_flight = 4;
};

inline nlohmann::json bytes_to_payload(const std::string& png_bytes, const RemoteConfig& cfg) {
    if (png_bytes.size() > cfg.inline_limit && !cfg.blob_dir.empty()) {
        std::filesystem::create_directories(cfg.blob_dir);
        const std::filesystem::path path =
            cfg.blob_dir / ("sha256-" + sha256_hex(png_bytes) + ".png");
        if (!std::filesystem::exists(path)) {
            const std::filesystem::path tmp = path.string() + ".tmp";
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw IoError("cannot write blob " + tmp.string());
            out.write(png_bytes.data(), static_cast<std::streamsize>(png_bytes.size()));
            out.close();
            std::filesystem::rename(tmp, path);
        }
        return {{"encoding", "file"}, {"path", path.string()}};
    }
    return {{"encoding", "base64+png"}, {"data", base64_encode(png_bytes)}};
}

inline std::string payload_to_bytes(const nlohmann::json& payload) {
    const std::string encoding = payload.at("encoding").get<std::string>();
    if (encoding == "base64+png") {
        return base64_decode(payload.at("data").get<std::string>());
    }
    if (encoding == "file") {
        const std::filesystem::path path = payload.at("path").get<std::string>();
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ProtocolError("referenced blob " + path.string() + " cannot be read");
        std::ostringstream buf;
        buf << in.rdbuf();
        return std::move(buf).str();
    }
    throw ProtocolError("unknown payload encoding \"" + encoding + "\"");
}

inline nlohmann::json image_to_payload(const ImageRgb& image, const RemoteConfig& cfg) {
    return bytes_to_payload(encode_png_bytes(image), cfg);
}

inline nlohmann::json mask_to_payload(const Mask& mask, const RemoteConfig& cfg) {
    return bytes_to_payload(encode_png_bytes(mask_to_gray(mask)), cfg);
}

inline ImageRgb payload_to_image(const nlohmann::json& payload) {
    return decode_png_rgb(payload_to_bytes(payload));
}

// Float maps travel as 16-bit quantized PNG plus the value range.
inline nlohmann::json map_to_payload(const MapF& map, const RemoteConfig& cfg) {
    float lo = map.at(0, 0);
    float hi = lo;
    for (int y = 0; y < map.height(); ++y) {
        const float* row = map.row(y);
        for (int x = 0; x < map.width(); ++x) {
            lo = std::min(lo, row[x]);
            hi = std::max(hi, row[x]);
        }
    }
    ImageGray16 q(map.width(), map.height());
    const double scale = hi > lo ? 65535.0 / (static_cast<double>(hi) - lo) : 0.0;
    for (int y = 0; y < map.height(); ++y) {
        const float* in = map.row(y);
        std::uint16_t* out = q.row(y);
        for (int x = 0; x < map.width(); ++x) {
            out[x] = static_cast<std::uint16_t>(std::llround((in[x] - lo) * scale));
        }
    }
    return {{"png16", bytes_to_payload(encode_png_bytes(q), cfg)}, {"min", lo}, {"max", hi}};
}

inline MapF payload_to_map(const nlohmann::json& payload) {
    const double lo = payload.at("min").get<double>();
    const double hi = payload.at("max").get<double>();
    const ImageGray16 q = decode_png_gray16(payload_to_bytes(payload.at("png16")));
    MapF map(q.width(), q.height());
    const double scale = hi > lo ? (hi - lo) / 65535.0 : 0.0;
    for (int y = 0; y < q.height(); ++y) {
        const std::uint16_t* in = q.row(y);
        float* out = map.row(y);
        for (int x = 0; x < q.width(); ++x) out[x] = static_cast<float>(lo + in[x] * scale);
    }
    return map;
}

// ---------------------------------------------------------------------------
// HTTP client with transport retries. Content-level failures (the service
// answered with an error object) are never retried; connection failures and
// 5xx responses are, with exponential backoff, up to cfg.retries attempts.
// ---------------------------------------------------------------------------

class RemoteClient {
public:
    explicit RemoteClient(RemoteConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.base_url.empty()) throw ConfigError("remote backend needs a base URL");
        if (cfg_.retries < 1) throw ConfigError("remote retries must be >= 1");
    }

    const RemoteConfig& config() const { return cfg_; }

    nlohmann::json call(const std::string& path, const nlohmann::json& body) {
        std::lock_guard lock(mutex_);
        httplib::Client client(cfg_.base_url);
        client.set_connection_timeout(cfg_.timeout);
        client.set_read_timeout(cfg_.timeout);
        client.set_write_timeout(cfg_.timeout);

        const std::string payload = body.dump();
        std::string last_transport_error;
        for (int attempt = 1; attempt <= cfg_.retries; ++attempt) {
            last_attempts_ = attempt;
            httplib::Result res = client.Post(path, payload, "application/json");
            if (!res) {
                last_transport_error = httplib::to_string(res.error());
            } else if (res->status >= 500) {
                last_transport_error = "status " + std::to_string(res->status);
            } else {
                nlohmann::json parsed;
                try {
                    parsed = nlohmann::json::parse(res->body);
                } catch (const nlohmann::json::exception& e) {
                    throw ProtocolError(cfg_.base_url + path + ": response is not JSON: " +
                                        e.what());
                }
                if (parsed.contains("error")) {
                    const auto& err = parsed.at("error");
                    const std::string message =
                        err.is_object() ? err.value("message", err.dump()) : err.dump();
                    throw BackendError(cfg_.base_url + path + ": " + message);
                }
                if (res->status != 200) {
                    throw ProtocolError(cfg_.base_url + path + ": unexpected status " +
                                        std::to_string(res->status));
                }
                return parsed;
            }
            if (attempt < cfg_.retries) {
                std::this_thread::sleep_for(cfg_.initial_backoff * (1 << (attempt - 1)));
            }
        }
        throw BackendUnavailableError(cfg_.base_url + path + ": " + last_transport_error +
                                      " after " + std::to_string(cfg_.retries) + " attempts");
    }

    int last_attempts() const { return last_attempts_; }

private:
    RemoteConfig cfg_;
    std::mutex mutex_;
    int last_attempts_ = 0;
};

// ---------------------------------------------------------------------------
// Remote-backed implementations of the model interfaces
// ---------------------------------------------------------------------------

class RemoteInpaintBackend : public InpaintBackend {
public:
    explicit RemoteInpaintBackend(std::shared_ptr<RemoteClient> client)
        : client_(std::move(client)) {}

    BackendDescriptor descriptor() const override {
        return {BackendKind::inpaint, "remote-inpaint@" + client_->config().base_url, false,
                client_->config().max_in_flight};
    }

    ImageRgb inpaint(const GenerationRequest& request) override {
        request.validate();
        const RemoteConfig& cfg = client_->config();
        nlohmann::json body{{"prompt", request.prompt_text},
                            {"seed", request.seed},
                            {"image", image_to_payload(request.base_image, cfg)},
                            {"mask", mask_to_payload(request.mask, cfg)}};
        if (!request.negative_hint.empty()) body["negative"] = request.negative_hint;
        if (!request.depth_control.empty()) {
            body["depth"] = map_to_payload(request.depth_control, cfg);
        }
        if (!request.edge_control.empty()) {
            body["edge"] = map_to_payload(request.edge_control, cfg);
        }
        if (!request.context.image_id.empty()) {
            body["context"] = {{"image_id", request.context.image_id},
                               {"instance_id", request.context.instance_id},
                               {"variant_index", request.context.variant_index}};
        }
        const nlohmann::json res = client_->call("/v1/inpaint", body);
        try {
            return payload_to_image(res.at("image"));
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("inpaint response: ") + e.what());
        }
    }

private:
    std::shared_ptr<RemoteClient> client_;
};

class RemoteDepthBackend : public DepthBackend {
public:
    explicit RemoteDepthBackend(std::shared_ptr<RemoteClient> client)
        : client_(std::move(client)) {}

    BackendDescriptor descriptor() const override {
        return {BackendKind::depth, "remote-depth@" + client_->config().base_url, true,
                client_->config().max_in_flight};
    }

    MapF estimate_depth(const ImageRgb& image) override {
        const nlohmann::json res =
            client_->call("/v1/depth", {{"image", image_to_payload(image, client_->config())}});
        try {
            return payload_to_map(res.at("map"));
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("depth response: ") + e.what());
        }
    }

private:
    std::shared_ptr<RemoteClient> client_;
};

class RemoteEdgeBackend : public EdgeBackend {
public:
    explicit RemoteEdgeBackend(std::shared_ptr<RemoteClient> client)
        : client_(std::move(client)) {}

    BackendDescriptor descriptor() const override {
        return {BackendKind::edge, "remote-edge@" + client_->config().base_url, true,
                client_->config().max_in_flight};
    }

    MapF detect_edges(const ImageRgb& image) override {
        const nlohmann::json res =
            client_->call("/v1/edge", {{"image", image_to_payload(image, client_->config())}});
        try {
            return payload_to_map(res.at("map"));
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("edge response: ") + e.what());
        }
    }

private:
    std::shared_ptr<RemoteClient> client_;
};

class RemoteVqaBackend : public VqaBackend {
public:
    explicit RemoteVqaBackend(std::shared_ptr<RemoteClient> client) : client_(std::move(client)) {}

    BackendDescriptor descriptor() const override {
        return {BackendKind::vqa, "remote-vqa@" + client_->config().base_url, false,
                client_->config().max_in_flight};
    }

    std::string answer(const ImageRgb& image, const std::string& question) override {
        const nlohmann::json res =
            client_->call("/v1/vqa", {{"image", image_to_payload(image, client_->config())},
                                      {"question", question}});
        try {
            return res.at("answer").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("vqa response: ") + e.what());
        }
    }

private:
    std::shared_ptr<RemoteClient> client_;
};

class RemoteNsfwBackend : public NsfwBackend {
public:
    explicit RemoteNsfwBackend(std::shared_ptr<RemoteClient> client)
        : client_(std::move(client)) {}

    BackendDescriptor descriptor() const override {
        return {BackendKind::nsfw, "remote-nsfw@" + client_->config().base_url, true,
                client_->config().max_in_flight};
    }

    NsfwVerdict check(const ImageRgb& region) override {
        const nlohmann::json res =
            client_->call("/v1/nsfw", {{"image", image_to_payload(region, client_->config())}});
        try {
            return {res.at("passed").get<bool>(), res.value("score", 0.0)};
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("nsfw response: ") + e.what());
        }
    }

private:
    std::shared_ptr<RemoteClient> client_;
};

class RemoteSaliencyBackend : public SaliencyBackend {
public:
    explicit RemoteSaliencyBackend(std::shared_ptr<RemoteClient> client)
        : client_(std::move(client)) {}

    BackendDescriptor descriptor() const override {
        return {BackendKind::saliency, "remote-saliency@" + client_->config().base_url, true,
                client_->config().max_in_flight};
    }

    ImageGray saliency(const ImageRgb& image) override {
        const nlohmann::json res =
            client_->call("/v1/saliency", {{"image", image_to_payload(image, client_->config())}});
        try {
            return decode_png_gray(payload_to_bytes(res.at("map")));
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("saliency response: ") + e.what());
        }
    }

private:
    std::shared_ptr<RemoteClient> client_;
};

}  // namespace instaug
