#include "refinery/lid.hpp"

#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <limits>
#include <set>

#include <unicode/locid.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "refinery/errors.hpp"
#include "refinery/io.hpp"
#include "refinery/text.hpp"

namespace refinery {

namespace {

bool keep_for_lid(UChar32 c) {
    const auto mask = U_GET_GC_MASK(c);
    if ((mask & (U_GC_L_MASK | U_GC_M_MASK)) == 0) return false;
    return (mask & (U_GC_LU_MASK | U_GC_LT_MASK)) == 0;
}

}  // namespace

LidPrepText normalize_for_lid(std::string_view text) {
    // Whitespace runs collapse during the final pass, so normalizing them up
    // front only matters for lowercasing context, which ignores spaces anyway.
    auto ustr = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    ustr.toLower(icu::Locale::getRoot());

    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (int32_t i = 0; i < ustr.length();) {
        const UChar32 c = ustr.char32At(i);
        i += U16_LENGTH(c);
        if (!keep_for_lid(c)) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        append_utf8(out, static_cast<char32_t>(c));
    }
    return LidPrepText(std::move(out));
}

// --- NgramClassifier --------------------------------------------------------

NgramClassifier::NgramClassifier(const std::map<std::string, std::vector<std::string>>& seeds)
    : NgramClassifier(seeds, Options{}) {}

NgramClassifier::NgramClassifier(const std::map<std::string, std::vector<std::string>>& seeds, Options options)
    : options_(options) {
    if (seeds.empty()) throw ClassifierError("n-gram classifier needs seed text for at least one language");
    if (options_.max_order == 0) throw ContractError("n-gram order must be >= 1");
    if (!(options_.smoothing > 0.0)) throw ContractError("smoothing must be positive");

    std::vector<std::unordered_map<std::string, double>> counts(seeds.size());
    std::vector<double> totals(seeds.size(), 0.0);
    std::set<std::string> vocabulary;
    std::size_t li = 0;
    for (const auto& [label, texts] : seeds) {
        if (label.empty() || label == kUndeterminedLanguage) {
            throw ClassifierError("invalid classifier label \"" + label + "\"");
        }
        for (const auto& seed : texts) {
            for (auto& feature : features(normalize_for_lid(seed).text())) {
                counts[li][feature] += 1.0;
                totals[li] += 1.0;
                vocabulary.insert(std::move(feature));
            }
        }
        ++li;
    }
    const double v = static_cast<double>(std::max<std::size_t>(vocabulary.size(), 1));
    li = 0;
    for (const auto& [label, texts] : seeds) {
        LanguageModel model;
        model.label = label;
        const double denom = totals[li] + options_.smoothing * v;
        model.unseen_log_prob = std::log(options_.smoothing / denom);
        for (const auto& [feature, count] : counts[li]) {
            model.log_prob.emplace(feature, std::log((count + options_.smoothing) / denom));
        }
        models_.push_back(std::move(model));
        ++li;
    }
}

NgramClassifier NgramClassifier::from_seed_file(const std::filesystem::path& path) {
    const Json seeds_json = read_json_file(path);
    if (!seeds_json.is_object()) throw ClassifierError(path.string() + ": seed file must be a JSON object");
    std::map<std::string, std::vector<std::string>> seeds;
    for (auto it = seeds_json.begin(); it != seeds_json.end(); ++it) {
        auto& texts = seeds[it.key()];
        if (it.value().is_string()) {
            texts.push_back(it.value().get<std::string>());
        } else if (it.value().is_array()) {
            for (const auto& t : it.value()) {
                if (!t.is_string()) throw ClassifierError(path.string() + ": seed texts must be strings");
                texts.push_back(t.get<std::string>());
            }
        } else {
            throw ClassifierError(path.string() + ": seeds for \"" + it.key() + "\" must be a string or array");
        }
    }
    return NgramClassifier(seeds);
}

std::vector<std::string> NgramClassifier::features(std::string_view normalized) const {
    std::vector<std::string> out;
    if (normalized.empty()) return out;
    // Pad with spaces so word boundaries become features.
    std::string padded;
    padded.reserve(normalized.size() + 2);
    padded.push_back(' ');
    padded.append(normalized);
    padded.push_back(' ');
    std::vector<std::size_t> starts;
    for (std::size_t pos = 0; pos < padded.size();) {
        starts.push_back(pos);
        next_code_point(padded, pos);
    }
    starts.push_back(padded.size());
    const std::size_t n_cp = starts.size() - 1;
    for (std::size_t order = 1; order <= options_.max_order; ++order) {
        for (std::size_t i = 0; i + order <= n_cp; ++i) {
            out.emplace_back(padded.substr(starts[i], starts[i + order] - starts[i]));
        }
    }
    return out;
}

LangPrediction NgramClassifier::classify(const LidPrepText& text) const {
    if (text.empty()) return {std::string(kUndeterminedLanguage), 0.0};
    const auto feats = features(text.text());
    std::vector<double> scores(models_.size(), 0.0);
    for (std::size_t m = 0; m < models_.size(); ++m) {
        const auto& model = models_[m];
        double score = 0.0;
        for (const auto& f : feats) {
            auto it = model.log_prob.find(f);
            score += it == model.log_prob.end() ? model.unseen_log_prob : it->second;
        }
        scores[m] = score;
    }
    std::size_t best = 0;
    for (std::size_t m = 1; m < scores.size(); ++m) {
        if (scores[m] > scores[best]) best = m;
    }
    double norm = 0.0;
    for (double s : scores) norm += std::exp(s - scores[best]);
    return {models_[best].label, std::clamp(1.0 / norm, 0.0, 1.0)};
}

std::vector<std::string> NgramClassifier::inventory() const {
    std::vector<std::string> labels;
    for (const auto& m : models_) labels.push_back(m.label);
    return labels;
}

// --- CommandClassifier ------------------------------------------------------

CommandClassifier::CommandClassifier(std::string command) : command_(std::move(command)) {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
        throw ClassifierError(std::string("socketpair failed: ") + std::strerror(errno));
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
        ::close(fds[0]);
        ::close(fds[1]);
        throw ClassifierError(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::dup2(fds[1], STDIN_FILENO);
        ::dup2(fds[1], STDOUT_FILENO);
        ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(fds[1]);
    pid_ = pid;
    to_child_ = fds[0];
    from_child_ = fds[0];
}

CommandClassifier::~CommandClassifier() {
    if (to_child_ >= 0) ::close(to_child_);
    if (pid_ > 0) {
        int status = 0;
        ::waitpid(pid_, &status, 0);
    }
}

LangPrediction CommandClassifier::classify(const LidPrepText& text) const {
    if (text.empty()) return {std::string(kUndeterminedLanguage), 0.0};
    std::lock_guard lock(mutex_);
    std::string request = text.text();
    request.push_back('\n');
    std::size_t sent = 0;
    while (sent < request.size()) {
        const ssize_t n = ::send(to_child_, request.data() + sent, request.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw ClassifierError("classifier command \"" + command_ + "\": write failed: " + std::strerror(errno));
        }
        sent += static_cast<std::size_t>(n);
    }
    std::size_t nl;
    while ((nl = read_buffer_.find('\n')) == std::string::npos) {
        char buf[4096];
        const ssize_t n = ::read(from_child_, buf, sizeof buf);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) throw ClassifierError("classifier command \"" + command_ + "\" closed its output");
        read_buffer_.append(buf, static_cast<std::size_t>(n));
    }
    std::string line = read_buffer_.substr(0, nl);
    read_buffer_.erase(0, nl + 1);

    const auto fields = whitespace_tokens(line);
    if (fields.size() < 2) throw ClassifierError("classifier replied \"" + line + "\"; expected \"<label> <confidence>\"");
    std::string label(fields[0]);
    if (label.rfind("__label__", 0) == 0) label.erase(0, 9);
    double confidence = 0.0;
    try {
        confidence = std::stod(std::string(fields[1]));
    } catch (const std::exception&) {
        throw ClassifierError("classifier replied with non-numeric confidence \"" + std::string(fields[1]) + "\"");
    }
    if (label.empty() || !(confidence >= 0.0 && confidence <= 1.0)) {
        throw ClassifierError("classifier reply out of contract: \"" + line + "\"");
    }
    return {std::move(label), confidence};
}

// --- segment profiling ------------------------------------------------------

double in_language_fraction(const std::vector<std::string>& seg_langs, std::string_view lang) {
    if (seg_langs.empty()) return 0.0;
    const auto matching = std::count(seg_langs.begin(), seg_langs.end(), lang);
    return static_cast<double>(matching) / static_cast<double>(seg_langs.size());
}

SegmentProfile profile_segments(const Document& doc, const LanguageClassifier& classifier) {
    SegmentProfile profile;
    for (const auto& segment : segment_text(doc.text)) {
        profile.seg_langs.push_back(classifier.classify(normalize_for_lid(segment.text)).label);
    }
    profile.warning = profile.seg_langs.empty();
    profile.in_language_fraction = in_language_fraction(profile.seg_langs, doc.lang);
    return profile;
}

}  // namespace refinery
