#include "regimekit/assurance.hpp"

#include <algorithm>

namespace regimekit {

std::string to_string(Channel c) { return c == Channel::AIActive ? "AIActive" : "FallbackActive"; }
std::string to_string(Source s) { return s == Source::AI ? "AI" : "Fallback"; }

GuardStep guard_step(ChannelState ch, const IntegrityReport& report, const GuardConfig& cfg) {
    const bool healthy = report.status == Status::Nominal || report.status == Status::PeacefulSuccession;
    ch.hung_streak = report.status == Status::HungParliament ? ch.hung_streak + 1 : 0;

    const Channel before = ch.channel;
    if (ch.channel == Channel::AIActive) {
        if (report.status == Status::ConstitutionalFailure || ch.hung_streak > cfg.hung_patience) {
            ch.channel = Channel::FallbackActive;
            ch.good_streak = 0;
        }
    } else {
        ch.good_streak = healthy ? ch.good_streak + 1 : 0;
        if (ch.good_streak >= cfg.recovery_hysteresis) {
            ch.channel = Channel::AIActive;
            ch.good_streak = 0;
        }
    }
    ch.steps_in_channel = ch.channel == before ? ch.steps_in_channel + 1 : 0;
    return {ch, ch.channel == Channel::AIActive ? Source::AI : Source::Fallback};
}

double fallback_command(const StateSample&, const FallbackConfig& cfg) {
    return std::clamp(cfg.a_target / (cfg.mu_worst * kGravity), 0.0, 1.0);
}

}  // namespace regimekit
