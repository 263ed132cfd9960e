#pragma once

// Internal: template wording shared between the prompt builders and the
// editable definitions in prompt_templates.cpp.

namespace anaquest::gen::templates {

extern const char* const kAnaquestFraming;
extern const char* const kMisunderstandingInstruction;
extern const char* const kOutputFormat;

}  // namespace anaquest::gen::templates
