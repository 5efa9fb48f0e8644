#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "simlink/apdu/bytes.hpp"

namespace simlink::vsim {

struct SimProfile;

enum class FileKind { Directory, Transparent, LinearFixed };

struct FileNode {
  std::uint16_t fid = 0;
  FileKind kind = FileKind::Directory;
  std::string name;
  std::optional<std::uint16_t> parent;
  Bytes body;                 // transparent EFs
  std::vector<Bytes> records; // linear fixed EFs
  Bytes aid;                  // ADFs
};

inline constexpr std::uint16_t kFidMf = 0x3F00;
inline constexpr std::uint16_t kFidIccid = 0x2FE2;
inline constexpr std::uint16_t kFidTelecom = 0x7F10;
inline constexpr std::uint16_t kFidAdn = 0x6F3A;
inline constexpr std::uint16_t kFidAdfUsim = 0x7FFF;
inline constexpr std::uint16_t kFidImsi = 0x6F07;

// USIM application identifier (RID A000000087, app code 1002).
Bytes usim_aid();

// Flat store of the small demo tree with a single selection pointer.
// File ids are unique across the tree, so selection by id does not depend
// on the current directory.
class FileSystem {
 public:
  static FileSystem for_profile(const SimProfile& profile);

  // Both leave the selection unchanged and return false when nothing
  // matches. AIDs match on a prefix of at least 5 octets.
  bool select_fid(std::uint16_t fid);
  bool select_aid(ByteView aid);

  void reset() noexcept { current_ = kFidMf; }

  const FileNode& current() const;
  const FileNode* find(std::uint16_t fid) const;
  const std::vector<FileNode>& files() const noexcept { return files_; }

 private:
  std::vector<FileNode> files_;
  std::uint16_t current_ = kFidMf;
};

}  // namespace simlink::vsim
