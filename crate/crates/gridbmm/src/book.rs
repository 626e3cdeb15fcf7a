//! Doc-test shims for the book chapters; filled in alongside book/.
