#pragma once

// Shared credential pipeline for the text, object-hash and object schemes.
//
// Every scheme reduces to a PasswordString. For object passwords that string
// is the lowercase hex of the object's SHA-256 digest, so the server-side
// path is the same no matter where the digest was computed:
//
//   stored = SHA-256(password_bytes || salt_bytes)
//
// The password bytes come first, then the 16 salt bytes. This order is a
// protocol constant and changing it invalidates every stored account.

#include "objauth/error.hpp"

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace objauth {

inline constexpr std::size_t kDigestSize = 32;
inline constexpr std::size_t kSaltSize = 16;
inline constexpr std::size_t kMaxUserIdBytes = 64;

using ByteView = std::span<const std::uint8_t>;

/// Lowercase hex of arbitrary bytes.
[[nodiscard]] std::string hex_encode(ByteView bytes);

/// Decodes hex of any case. Throws DecodeError on odd length or a non-hex
/// character.
[[nodiscard]] std::vector<std::uint8_t> hex_decode(std::string_view text);

/// Compares two byte ranges in time that depends only on their lengths.
[[nodiscard]] bool constant_time_equal(ByteView a, ByteView b) noexcept;

/// Fixed-width byte value. `Tag` keeps digests and salts from mixing.
template <std::size_t N, typename Tag>
class FixedBytes {
public:
    static constexpr std::size_t size = N;

    FixedBytes() = default;
    explicit FixedBytes(const std::array<std::uint8_t, N>& bytes) : bytes_(bytes) {}

    /// Throws InvalidInput unless `bytes` is exactly N long.
    static FixedBytes from_bytes(ByteView bytes) {
        if (bytes.size() != N) {
            throw InvalidInput("expected " + std::to_string(N) + " bytes, got " +
                               std::to_string(bytes.size()));
        }
        FixedBytes out;
        std::copy(bytes.begin(), bytes.end(), out.bytes_.begin());
        return out;
    }

    /// Accepts exactly 2N hex characters of either case.
    static FixedBytes from_hex(std::string_view text) {
        if (text.size() != 2 * N) {
            throw DecodeError("expected " + std::to_string(2 * N) + " hex characters, got " +
                              std::to_string(text.size()));
        }
        const auto raw = hex_decode(text);
        return from_bytes(raw);
    }

    [[nodiscard]] ByteView bytes() const noexcept { return bytes_; }
    [[nodiscard]] std::array<std::uint8_t, N>& mutable_bytes() noexcept { return bytes_; }
    [[nodiscard]] std::string hex() const { return hex_encode(bytes_); }

    friend bool operator==(const FixedBytes&, const FixedBytes&) = default;

private:
    std::array<std::uint8_t, N> bytes_{};
};

struct DigestTag;
struct SaltTag;

/// SHA-256 output.
using Digest = FixedBytes<kDigestSize, DigestTag>;
/// Per-account random salt, 128 bits.
using Salt = FixedBytes<kSaltSize, SaltTag>;

/// Non-empty byte string fed to the stored-hash derivation: a text password,
/// or the canonical hex of an object digest.
class PasswordString {
public:
    /// Throws InvalidInput when `value` is empty.
    explicit PasswordString(std::string value);

    static PasswordString from_digest(const Digest& digest);

    /// Password as received from a client. A value of exactly 64 hex
    /// characters is a transcribed digest and is folded to lowercase; any
    /// other value is taken verbatim.
    static PasswordString from_transmitted(std::string value);

    [[nodiscard]] const std::string& value() const noexcept { return value_; }
    [[nodiscard]] ByteView bytes() const noexcept;

    friend bool operator==(const PasswordString&, const PasswordString&) = default;

private:
    std::string value_;
};

struct AccountRecord {
    std::string user_id;
    Digest pwd_hash;
    Salt salt;

    friend bool operator==(const AccountRecord&, const AccountRecord&) = default;
};

/// Incremental SHA-256 for inputs that should not be buffered whole.
class DigestStream {
public:
    DigestStream();
    ~DigestStream();
    DigestStream(DigestStream&&) noexcept;
    DigestStream& operator=(DigestStream&&) noexcept;
    DigestStream(const DigestStream&) = delete;
    DigestStream& operator=(const DigestStream&) = delete;

    void update(ByteView chunk);
    void update(std::string_view chunk);

    /// Produces the digest. The stream must not be updated afterwards.
    [[nodiscard]] Digest finish();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// SHA-256 of the raw object bytes. Names and metadata play no part.
[[nodiscard]] Digest object_digest(ByteView object);
[[nodiscard]] Digest object_digest(std::string_view object);

/// Streams a file through SHA-256 in fixed-size chunks. Throws IoError when
/// the file cannot be opened or read.
[[nodiscard]] Digest digest_file(const std::filesystem::path& path);

/// 16 bytes from the OS CSPRNG. Throws RandomnessError on failure.
[[nodiscard]] Salt generate_salt();

[[nodiscard]] Digest derive_stored_hash(const PasswordString& password, const Salt& salt);

/// True iff the derived hash equals `record.pwd_hash`. Never throws on
/// mismatch.
[[nodiscard]] bool verify_credentials(const PasswordString& password,
                                      const AccountRecord& record) noexcept;

[[nodiscard]] std::string digest_to_hex(const Digest& digest);
[[nodiscard]] Digest hex_to_digest(std::string_view text);

/// Throws InvalidInput unless `user_id` is 1..64 bytes of valid UTF-8 with
/// no control characters.
void validate_user_id(std::string_view user_id);

/// Builds a fresh record for `user_id` with a newly generated salt.
[[nodiscard]] AccountRecord make_account(std::string user_id, const PasswordString& password);

} // namespace objauth
