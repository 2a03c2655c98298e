#pragma once

#include <memory>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "instaug/backend.hpp"
#include "instaug/error.hpp"
#include "instaug/mock_backends.hpp"
#include "instaug/pipeline.hpp"
#include "instaug/remote.hpp"

namespace instaug {

// Owns the six model backends for a run. Mock and remote implementations can
// be mixed freely; the pipeline only sees the BackendSet view.
struct OwnedBackends {
    std::unique_ptr<InpaintBackend> inpaint;
    std::unique_ptr<DepthBackend> depth;
    std::unique_ptr<EdgeBackend> edge;
    std::unique_ptr<VqaBackend> vqa;
    std::unique_ptr<NsfwBackend> nsfw;
    std::unique_ptr<SaliencyBackend> saliency;

    BackendSet set() const {
        return {inpaint.get(), depth.get(), edge.get(),
                vqa.get(),     nsfw.get(),  saliency.get()};
    }
};

namespace detail {

inline RemoteConfig remote_config_from_json(const nlohmann::json& j) {
    RemoteConfig cfg;
    cfg.base_url = j.at("endpoint").get<std::string>();
    cfg.retries = j.value("retries", cfg.retries);
    cfg.initial_backoff = std::chrono::milliseconds(
        j.value("backoff_ms", static_cast<int>(cfg.initial_backoff.count())));
    cfg.inline_limit = j.value("inline_limit", cfg.inline_limit);
    if (j.contains("blob_dir")) cfg.blob_dir = j.at("blob_dir").get<std::string>();
    cfg.timeout = std::chrono::seconds(j.value("timeout_s", static_cast<int>(cfg.timeout.count())));
    cfg.max_in_flight = j.value("max_in_flight", cfg.max_in_flight);
    return cfg;
}

inline std::shared_ptr<RemoteClient> remote_client_for(const nlohmann::json& kind_cfg) {
    return std::make_shared<RemoteClient>(remote_config_from_json(kind_cfg));
}

inline MockInpainter::Options mock_inpaint_options(const nlohmann::json& j) {
    MockInpainter::Options opt;
    const std::string mode = j.value("mode", "constant_color");
    if (mode == "constant_color") {
        opt.mode = MockInpainter::FillMode::constant_color;
    } else if (mode == "textured") {
        opt.mode = MockInpainter::FillMode::textured;
    } else {
        throw ConfigError("unknown mock inpaint mode \"" + mode + "\"");
    }
    opt.codec_down_factor = j.value("codec_down_factor", opt.codec_down_factor);
    opt.max_in_flight = j.value("max_in_flight", opt.max_in_flight);
    for (const auto& id : j.value("fail_image_ids", nlohmann::json::array())) {
        opt.fail_image_ids.insert(id.get<std::string>());
    }
    return opt;
}

}  // namespace detail

// Builds the backend roster from the "backends" section of the run
// configuration. Each kind picks the remote implementation when an
// "endpoint" is configured (unless force_mock suppresses that) and the mock
// implementation otherwise. Example:
//
//   {"inpaint": {"endpoint": "http://10.0.0.5:8188"},
//    "nsfw":    {"mock": {"band": [0, 255]}}}
inline OwnedBackends make_backends(const nlohmann::json& config, bool force_mock = false) {
    if (!config.is_object() && !config.is_null()) {
        throw ConfigError("backends configuration must be a JSON object");
    }
    const auto kind_cfg = [&](const char* kind) -> nlohmann::json {
        if (config.is_object() && config.contains(kind)) return config.at(kind);
        return nlohmann::json::object();
    };
    const auto is_remote = [&](const nlohmann::json& j) {
        return !force_mock && j.contains("endpoint");
    };
    const auto mock_cfg = [](const nlohmann::json& j) -> nlohmann::json {
        return j.contains("mock") ? j.at("mock") : nlohmann::json::object();
    };

    OwnedBackends out;

    {
        const nlohmann::json j = kind_cfg("inpaint");
        if (is_remote(j)) {
            out.inpaint = std::make_unique<RemoteInpaintBackend>(detail::remote_client_for(j));
        } else {
            out.inpaint = std::make_unique<MockInpainter>(detail::mock_inpaint_options(mock_cfg(j)));
        }
    }
    {
        const nlohmann::json j = kind_cfg("depth");
        if (is_remote(j)) {
            out.depth = std::make_unique<RemoteDepthBackend>(detail::remote_client_for(j));
        } else {
            out.depth = std::make_unique<MockDepthEstimator>();
        }
    }
    {
        const nlohmann::json j = kind_cfg("edge");
        if (is_remote(j)) {
            out.edge = std::make_unique<RemoteEdgeBackend>(detail::remote_client_for(j));
        } else {
            out.edge = std::make_unique<MockEdgeDetector>();
        }
    }
    {
        const nlohmann::json j = kind_cfg("vqa");
        if (is_remote(j)) {
            out.vqa = std::make_unique<RemoteVqaBackend>(detail::remote_client_for(j));
        } else {
            auto vqa = std::make_unique<MockVqa>();
            const nlohmann::json m = mock_cfg(j);
            vqa->default_answer = m.value("default_answer", "");
            if (m.contains("answers")) {
                for (const auto& [question, answer] : m.at("answers").items()) {
                    vqa->answers_by_question[question] = answer.get<std::string>();
                }
            }
            out.vqa = std::move(vqa);
        }
    }
    {
        const nlohmann::json j = kind_cfg("nsfw");
        if (is_remote(j)) {
            out.nsfw = std::make_unique<RemoteNsfwBackend>(detail::remote_client_for(j));
        } else {
            const nlohmann::json m = mock_cfg(j);
            if (m.contains("threshold")) {
                out.nsfw = std::make_unique<ThresholdNsfwFilter>(m.at("threshold").get<double>());
            } else {
                auto nsfw = std::make_unique<MockNsfwFilter>();
                if (m.contains("band")) {
                    nsfw->band_lo = m.at("band").at(0).get<double>();
                    nsfw->band_hi = m.at("band").at(1).get<double>();
                }
                out.nsfw = std::move(nsfw);
            }
        }
    }
    {
        const nlohmann::json j = kind_cfg("saliency");
        if (is_remote(j)) {
            out.saliency = std::make_unique<RemoteSaliencyBackend>(detail::remote_client_for(j));
        } else {
            out.saliency = std::make_unique<LuminanceSaliency>();
        }
    }
    return out;
}

}  // namespace instaug
