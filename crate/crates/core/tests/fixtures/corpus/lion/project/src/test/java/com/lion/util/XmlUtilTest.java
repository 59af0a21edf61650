package com.lion.util;

import org.junit.Test;

public class XmlUtilTest {
    @Test
    public void readsEmptyDocument() {
        XmlUtil.xml2Obj("<list/>", java.util.List.class);
    }
}
