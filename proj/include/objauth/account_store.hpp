#pragma once

#include "objauth/core.hpp"

#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>

namespace objauth {

/// File-backed user table. One JSON object per line:
///
///   {"user_id":"alice","pwd_hash":"<64 hex>","salt":"<32 hex>"}
///
/// Records are appended and fsync'd before create() returns. Reads may run
/// concurrently; writes are serialised internally.
class AccountStore {
public:
    /// Loads every record at `path`, creating an empty file if none exists.
    /// Throws StoreLoadError on the first malformed line, IoError if the file
    /// cannot be opened.
    explicit AccountStore(std::filesystem::path path);
    ~AccountStore();

    AccountStore(const AccountStore&) = delete;
    AccountStore& operator=(const AccountStore&) = delete;

    /// Throws AlreadyExists if the user id is taken; the existing record is
    /// left untouched. Throws InvalidInput for an invalid user id.
    void create(const AccountRecord& record);

    /// Throws NotFound for an unknown user id. Lookup is case-sensitive.
    [[nodiscard]] AccountRecord get(std::string_view user_id) const;
    [[nodiscard]] std::optional<AccountRecord> find(std::string_view user_id) const;

    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

    /// The exact line (without LF) written for `record`.
    [[nodiscard]] static std::string encode_line(const AccountRecord& record);
    /// Parses one line. Throws InvalidInput describing the defect.
    [[nodiscard]] static AccountRecord decode_line(std::string_view line);

private:
    void load();

    std::filesystem::path path_;
    int fd_ = -1;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, AccountRecord> records_;
};

} // namespace objauth
