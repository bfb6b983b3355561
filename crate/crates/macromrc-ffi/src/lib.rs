#[no_mangle]
pub extern "C" fn macromrc_placeholder() -> i32 { 0 }
