#include "objauth/account_store.hpp"

#include <json.hpp>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <mutex>

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

namespace objauth {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string errno_text() {
    return std::strerror(errno);
}

void write_all(int fd, std::string_view data, const std::filesystem::path& path) {
    while (!data.empty()) {
        const ssize_t n = ::write(fd, data.data(), data.size());
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw IoError("write to " + path.string() + " failed: " + errno_text());
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

bool is_lower_hex(std::string_view s) {
    for (const char c : s) {
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) {
            return false;
        }
    }
    return true;
}

std::string required_hex(const ordered_json& obj, const char* key, std::size_t width) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw InvalidInput(std::string("missing string field '") + key + "'");
    }
    auto value = it->get<std::string>();
    if (value.size() != width || !is_lower_hex(value)) {
        throw InvalidInput(std::string("field '") + key + "' is not " + std::to_string(width) +
                           " lowercase hex characters");
    }
    return value;
}

} // namespace

AccountStore::AccountStore(std::filesystem::path path) : path_(std::move(path)) {
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0600);
    if (fd_ < 0) {
        throw IoError("cannot open account store " + path_.string() + ": " + errno_text());
    }
    try {
        load();
    } catch (...) {
        ::close(fd_);
        fd_ = -1;
        throw;
    }
}

AccountStore::~AccountStore() {
    if (fd_ >= 0) {
        ::close(fd_);
    }
}

std::string AccountStore::encode_line(const AccountRecord& record) {
    ordered_json obj;
    obj["user_id"] = record.user_id;
    obj["pwd_hash"] = record.pwd_hash.hex();
    obj["salt"] = record.salt.hex();
    return obj.dump();
}

AccountRecord AccountStore::decode_line(std::string_view line) {
    const auto obj = ordered_json::parse(line, nullptr, false);
    if (obj.is_discarded()) {
        throw InvalidInput("not a JSON object");
    }
    if (!obj.is_object()) {
        throw InvalidInput("record is not a JSON object");
    }
    if (obj.size() != 3) {
        throw InvalidInput("record must have exactly user_id, pwd_hash and salt");
    }
    const auto uid = obj.find("user_id");
    if (uid == obj.end() || !uid->is_string()) {
        throw InvalidInput("missing string field 'user_id'");
    }
    AccountRecord record;
    record.user_id = uid->get<std::string>();
    validate_user_id(record.user_id);
    record.pwd_hash = Digest::from_hex(required_hex(obj, "pwd_hash", 2 * kDigestSize));
    record.salt = Salt::from_hex(required_hex(obj, "salt", 2 * kSaltSize));
    return record;
}

void AccountStore::load() {
    std::ifstream in(path_, std::ios::binary);
    if (!in) {
        throw IoError("cannot read account store " + path_.string());
    }
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        ++line_no;
        const std::size_t end = content.find('\n', pos);
        const bool terminated = end != std::string::npos;
        std::string_view line(content.data() + pos, (terminated ? end : content.size()) - pos);
        pos = terminated ? end + 1 : content.size();
        if (line.empty()) {
            continue;
        }
        AccountRecord record;
        try {
            record = decode_line(line);
        } catch (const Error& e) {
            throw StoreLoadError(line_no, e.what());
        }
        if (records_.contains(record.user_id)) {
            throw StoreLoadError(line_no, "duplicate user_id '" + record.user_id + "'");
        }
        records_.emplace(record.user_id, std::move(record));
    }

    // A complete final record may lack its LF; terminate it so appends start
    // on a fresh line.
    if (!content.empty() && content.back() != '\n') {
        write_all(fd_, "\n", path_);
        if (::fsync(fd_) != 0) {
            throw IoError("fsync of " + path_.string() + " failed: " + errno_text());
        }
    }
}

void AccountStore::create(const AccountRecord& record) {
    validate_user_id(record.user_id);
    const std::string line = encode_line(record) + "\n";

    std::unique_lock lock(mutex_);
    if (records_.contains(record.user_id)) {
        throw AlreadyExists("user '" + record.user_id + "' already exists");
    }
    write_all(fd_, line, path_);
    if (::fsync(fd_) != 0) {
        throw IoError("fsync of " + path_.string() + " failed: " + errno_text());
    }
    records_.emplace(record.user_id, record);
}

AccountRecord AccountStore::get(std::string_view user_id) const {
    auto record = find(user_id);
    if (!record) {
        throw NotFound("no such user");
    }
    return *std::move(record);
}

std::optional<AccountRecord> AccountStore::find(std::string_view user_id) const {
    std::shared_lock lock(mutex_);
    const auto it = records_.find(std::string(user_id));
    if (it == records_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t AccountStore::size() const {
    std::shared_lock lock(mutex_);
    return records_.size();
}

} // namespace objauth
