#include "simlink/vsim/file_system.hpp"

#include <algorithm>
#include <stdexcept>

#include "simlink/vsim/identity.hpp"
#include "simlink/vsim/profile.hpp"

namespace simlink::vsim {

namespace {

constexpr std::size_t kMinAidPrefix = 5;
constexpr std::size_t kAdnRecordSize = 16;

Bytes adn_record(std::string_view alpha) {
  Bytes rec(kAdnRecordSize, 0xFF);
  std::copy(alpha.begin(), alpha.end(), rec.begin());
  return rec;
}

}  // namespace

Bytes usim_aid() {
  return from_hex("A0000000871002FF33FF018906000000");
}

FileSystem FileSystem::for_profile(const SimProfile& profile) {
  FileSystem fs;
  fs.files_.push_back({kFidMf, FileKind::Directory, "MF", std::nullopt, {}, {}, {}});
  fs.files_.push_back({kFidIccid, FileKind::Transparent, "EF_ICCID", kFidMf,
                       encode_iccid(profile.iccid), {}, {}});
  fs.files_.push_back(
      {kFidTelecom, FileKind::Directory, "DF_TELECOM", kFidMf, {}, {}, {}});
  fs.files_.push_back({kFidAdn, FileKind::LinearFixed, "EF_ADN", kFidTelecom, {},
                       {adn_record("SIMLINK"), adn_record("")}, {}});
  fs.files_.push_back({kFidAdfUsim, FileKind::Directory, "ADF_USIM", kFidMf, {},
                       {}, usim_aid()});
  fs.files_.push_back({kFidImsi, FileKind::Transparent, "EF_IMSI", kFidAdfUsim,
                       encode_imsi(profile.imsi), {}, {}});
  return fs;
}

bool FileSystem::select_fid(std::uint16_t fid) {
  if (find(fid) == nullptr) return false;
  current_ = fid;
  return true;
}

bool FileSystem::select_aid(ByteView aid) {
  if (aid.size() < kMinAidPrefix) return false;
  for (const auto& f : files_) {
    if (f.aid.size() >= aid.size() &&
        std::equal(aid.begin(), aid.end(), f.aid.begin())) {
      current_ = f.fid;
      return true;
    }
  }
  return false;
}

const FileNode& FileSystem::current() const {
  const auto* node = find(current_);
  if (node == nullptr) throw std::logic_error("selection points at no file");
  return *node;
}

const FileNode* FileSystem::find(std::uint16_t fid) const {
  auto it = std::find_if(files_.begin(), files_.end(),
                         [fid](const FileNode& f) { return f.fid == fid; });
  return it == files_.end() ? nullptr : &*it;
}

}  // namespace simlink::vsim
