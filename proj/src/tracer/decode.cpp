#include "simlink/tracer/decode.hpp"

#include "simlink/apdu/apdu.hpp"
#include "simlink/apdu/ins.hpp"
#include "simlink/apdu/status.hpp"
#include "simlink/vsim/proactive.hpp"

namespace simlink::tracer {

namespace ins = apdu::ins;

namespace {

std::string ins_label(std::uint8_t code) {
  auto n = ins::name(code);
  return n ? std::string(*n) : std::string("UNKNOWN");
}

void add_details(Decoded& d, const std::optional<vsim::CommandDetails>& details) {
  if (!details) return;
  d.proactive_type = vsim::proactive_type_name(details->type);
  d.command_number = details->number;
}

}  // namespace

Decoded decode_command_event(ByteView raw, DecodeContext& ctx) {
  Decoded d;
  ctx.pending_select.reset();
  ctx.last_ins.reset();

  std::optional<apdu::CommandApdu> cmd;
  try {
    cmd = apdu::decode_command(raw);
  } catch (const apdu::ApduError&) {
    return d;
  }
  ctx.last_ins = cmd->ins();
  d.ins_name = ins_label(cmd->ins());

  switch (cmd->ins()) {
    case ins::kSelect:
      if ((cmd->p1() == 0x00 && cmd->data().size() == 2) || (cmd->p1() == 0x04 && !cmd->data().empty())) {
        d.file_id = to_hex(cmd->data());
        ctx.pending_select = d.file_id;
      }
      break;
    case ins::kReadBinary:
    case ins::kReadRecord:
      d.file_id = ctx.current_file;
      break;
    case ins::kTerminalResponse:
      add_details(d, vsim::parse_terminal_response(cmd->data()));
      break;
    default:
      break;
  }
  return d;
}

Decoded decode_response_event(ByteView raw, DecodeContext& ctx) {
  Decoded d;
  const auto last = ctx.last_ins;
  const auto pending = ctx.pending_select;
  ctx.last_ins.reset();
  ctx.pending_select.reset();

  std::optional<apdu::ResponseApdu> resp;
  try {
    resp = apdu::decode_response(raw);
  } catch (const apdu::ApduError&) {
    return d;
  }
  d.status_class = apdu::describe(apdu::classify_status(resp->sw1(), resp->sw2()));
  if (!last) return d;
  d.ins_name = ins_label(*last);

  switch (*last) {
    case ins::kSelect:
      d.file_id = pending;
      if (pending && (resp->sw1() == 0x90 || resp->sw1() == 0x91 || resp->sw1() == 0x61)) {
        ctx.current_file = pending;
      }
      break;
    case ins::kReadBinary:
    case ins::kReadRecord:
      d.file_id = ctx.current_file;
      break;
    case ins::kFetch:
      if (!resp->data().empty()) add_details(d, vsim::parse_proactive_command(resp->data()));
      break;
    default:
      break;
  }
  return d;
}

Decoded decode_event(Direction dir, ByteView raw, DecodeContext& ctx) {
  return dir == Direction::ModemToSim ? decode_command_event(raw, ctx)
                                      : decode_response_event(raw, ctx);
}

std::vector<Decoded> decode_trace(const std::vector<TraceEvent>& events) {
  DecodeContext ctx;
  std::vector<Decoded> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(decode_event(e.dir, e.raw, ctx));
  return out;
}

}  // namespace simlink::tracer
